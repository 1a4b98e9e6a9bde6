use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use super::{FewshotRun, Strategy};
use crate::Result;

/// `strategy,task,shots,seed,test_mse,wall_time`, one line per run.
pub fn write_results_csv<W: Write>(runs: &[FewshotRun], mut w: W) -> Result<()> {
    writeln!(w, "strategy,task,shots,seed,test_mse,wall_time")?;
    for r in runs {
        writeln!(
            w,
            "{},{},{},{},{:e},{:.3}",
            r.strategy.name(),
            r.task.name(),
            r.shots,
            r.seed,
            r.test_mse,
            r.wall_time
        )?;
    }
    Ok(())
}

const COLORS: [&str; 4] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a"];

/// Mean test MSE against shot count, one polyline per strategy, log-scaled MSE axis.
pub fn sweep_svg(runs: &[FewshotRun]) -> String {
    let (w, h, pad) = (640.0, 400.0, 60.0);
    let mut series: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in runs {
        let k = Strategy::ALL.iter().position(|&s| s == r.strategy).unwrap_or(0);
        series
            .entry(k)
            .or_default()
            .entry(r.shots)
            .or_default()
            .push(r.test_mse);
    }
    let points: Vec<(usize, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|(k, by_shot)| {
            let pts = by_shot
                .into_iter()
                .map(|(s, v)| (s as f64, (v.iter().sum::<f64>() / v.len() as f64).max(1e-300).log10()))
                .collect();
            (k, pts)
        })
        .collect();
    let all = points.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">shots</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 test MSE</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{x}</text>"#,
            sx(x),
            h - pad + 16.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{y:.2}</text>"#,
            pad - 4.0,
            sy(y) + 4.0
        );
    }
    for (n, (k, pts)) in points.iter().enumerate() {
        let color = COLORS[*k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = pad + 16.0 * n as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#,
            w - pad - 100.0,
            Strategy::ALL[*k].name()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::TaskKind;

    fn run(strategy: Strategy, shots: usize, mse: f64) -> FewshotRun {
        FewshotRun {
            strategy,
            task: TaskKind::ReactionForce,
            shots,
            seed: 0,
            test_mse: mse,
            wall_time: 1.25,
            target_digest: 0,
        }
    }

    #[test]
    fn csv_and_svg() {
        let runs = [
            run(Strategy::Parametric, 10, 0.5),
            run(Strategy::Scratch, 10, 2.0),
            run(Strategy::Scratch, 20, 1.0),
        ];
        let mut buf = Vec::new();
        write_results_csv(&runs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "strategy,task,shots,seed,test_mse,wall_time"
        );
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "parametric,reaction_force,10,0,5e-1,1.250"
        );
        let svg = sweep_svg(&runs);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}

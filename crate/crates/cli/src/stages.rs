use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use finesdf::downstream::{run_sweep, sweep_svg, write_results_csv, FewshotRun, GridSource};
use finesdf::eval::{linear_probe, reconstruct, sampling_density_report, ProbeReport};
use finesdf::geom::{family_bounds, generate, sample_design_grid, Aabb, BrepGraph, DesignGrid, Transform, TriMesh};
use finesdf::net::{GraphFeatures, PretrainModel};
use finesdf::pretrain::{encode_all, pretrain, write_loss_csv, PretrainDataset};
use finesdf::sdf::{
    build_index, precompute_near_zero, precompute_uniform_grid, read_sample_set, write_sample_set, SampleSidecar,
    SamplingMode, SdfSampleSet,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, Stage};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Written as `manifest.json` in every stage directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub config_hash: String,
    pub files: Vec<String>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GenExtra {
    grid: DesignGrid,
    family_bounds: Aabb<f64>,
}

pub fn stage_dir(cfg: &PipelineConfig, stage: Stage) -> PathBuf {
    cfg.out_dir.join(stage.dir_name())
}

fn geometry_name(i: usize) -> String {
    format!("g_{i:04}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Creates the stage directory with a copy of the producing configuration.
fn open_stage(cfg: &PipelineConfig, stage: Stage) -> Result<PathBuf> {
    let dir = stage_dir(cfg, stage);
    fs::create_dir_all(&dir)?;
    write_json(&cfg.out_dir.join("config.json"), cfg)?;
    write_json(&dir.join("config.json"), cfg)?;
    Ok(dir)
}

fn close_stage(
    cfg: &PipelineConfig,
    stage: Stage,
    files: Vec<String>,
    extra: serde_json::Value,
) -> Result<StageManifest> {
    let manifest = StageManifest {
        stage,
        config_hash: cfg.stage_hash(stage),
        files,
        extra,
    };
    write_json(&stage_dir(cfg, stage).join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Reads an upstream manifest and checks it was produced by this configuration.
pub fn require_stage(cfg: &PipelineConfig, stage: Stage) -> Result<StageManifest> {
    let path = stage_dir(cfg, stage).join("manifest.json");
    let manifest: StageManifest = read_json(&path)?;
    let expected = cfg.stage_hash(stage);
    if manifest.config_hash != expected {
        return Err(CliError::ConfigMismatch {
            stage: stage.dir_name().to_string(),
            expected,
            found: manifest.config_hash,
        });
    }
    Ok(manifest)
}

fn gen_extra(cfg: &PipelineConfig) -> Result<GenExtra> {
    Ok(serde_json::from_value(require_stage(cfg, Stage::Gen)?.extra)?)
}

/// Writes an OBJ mesh and B-Rep graph JSON per design-grid entry plus a manifest.
pub fn cmd_gen(cfg: &PipelineConfig) -> Result<StageManifest> {
    let dir = open_stage(cfg, Stage::Gen)?;
    let ranges = cfg.grid.ranges.unwrap_or_else(|| cfg.family.default_ranges());
    let grid = sample_design_grid(
        cfg.family,
        cfg.grid.levels,
        ranges,
        cfg.grid.test_fraction,
        cfg.grid.seed,
    )?;
    let bounds = family_bounds::<f64>(&grid)?;
    let files: Vec<Vec<String>> = grid
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<Vec<String>> {
            let (mesh, graph) = generate::<f64>(p)?;
            let name = geometry_name(i);
            let mut w = create_file(&dir.join(format!("{name}.obj")))?;
            mesh.write_obj(&mut w)?;
            w.flush()?;
            write_json(&dir.join(format!("{name}.graph.json")), &graph)?;
            Ok(vec![format!("{name}.obj"), format!("{name}.graph.json")])
        })
        .collect::<Result<_>>()?;
    log::info!("generated {} geometries in {}", grid.entries.len(), dir.display());
    let extra = serde_json::to_value(GenExtra {
        grid,
        family_bounds: bounds,
    })?;
    close_stage(cfg, Stage::Gen, files.concat(), extra)
}

fn unit_transform(bounds: &Aabb<f64>) -> Result<Transform<f64>> {
    Ok(Transform::fit_unit_cube(bounds)?)
}

fn load_mesh(cfg: &PipelineConfig, i: usize) -> Result<TriMesh<f64>> {
    let path = stage_dir(cfg, Stage::Gen).join(format!("{}.obj", geometry_name(i)));
    let file = fs::File::open(&path).map_err(|_| CliError::MissingArtifact(path.clone()))?;
    Ok(TriMesh::read_obj(BufReader::new(file))?)
}

fn load_normalized_mesh(cfg: &PipelineConfig, i: usize, t: &Transform<f64>) -> Result<TriMesh<f64>> {
    Ok(load_mesh(cfg, i)?.transformed(t.scale, t.offset))
}

fn load_graph(cfg: &PipelineConfig, i: usize, t: &Transform<f64>) -> Result<GraphFeatures> {
    let path = stage_dir(cfg, Stage::Gen).join(format!("{}.graph.json", geometry_name(i)));
    let graph: BrepGraph<f64> = read_json(&path)?;
    Ok(GraphFeatures::new(&graph.transformed(t.scale, t.offset))?)
}

fn load_graphs(cfg: &PipelineConfig, ids: &[usize], t: &Transform<f64>) -> Result<Vec<GraphFeatures>> {
    ids.par_iter().map(|&i| load_graph(cfg, i, t)).collect()
}

/// Per-geometry sample seed derived from the configured seed.
fn sample_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn density_csv<W: Write>(rows: &[(f64, f64)], mode: SamplingMode, mut w: W) -> Result<()> {
    writeln!(w, "threshold,fraction,mode")?;
    let mode = match mode {
        SamplingMode::NearZero => "near_zero",
        SamplingMode::UniformGrid => "uniform_grid",
    };
    for (t, f) in rows {
        writeln!(w, "{t},{f},{mode}")?;
    }
    Ok(())
}

/// Precomputes one sample set per geometry in normalized coordinates.
pub fn cmd_sdf(cfg: &PipelineConfig) -> Result<StageManifest> {
    let gen = gen_extra(cfg)?;
    let dir = open_stage(cfg, Stage::Sdf)?;
    let t = unit_transform(&gen.family_bounds)?;
    let n = gen.grid.entries.len();
    let spec = &cfg.sampling;
    let fractions: Vec<(Vec<String>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<String>, Vec<f64>)> {
            let mesh = load_normalized_mesh(cfg, i, &t)?;
            let index = build_index(&mesh)?;
            let seed = sample_seed(spec.seed, i);
            let mut set = match spec.mode {
                SamplingMode::NearZero => precompute_near_zero(&index, &mesh, spec.n_points, seed, &spec.mix)?,
                SamplingMode::UniformGrid => precompute_uniform_grid(&index, spec.grid_resolution)?,
            };
            set.geometry_id = i;
            let name = geometry_name(i);
            write_sample_set(&set, &dir.join(format!("{name}.nzs")))?;
            write_json(
                &dir.join(format!("{name}.json")),
                &SampleSidecar {
                    geometry_id: i,
                    seed,
                    family_bounds: gen.family_bounds,
                    sampling_mode: spec.mode,
                    count: set.len(),
                },
            )?;
            let report = sampling_density_report(&set, &cfg.eval.density_thresholds)?;
            Ok((
                vec![format!("{name}.nzs"), format!("{name}.json")],
                report.iter().map(|r| r.fraction).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let mean: Vec<(f64, f64)> = cfg
        .eval
        .density_thresholds
        .iter()
        .enumerate()
        .map(|(k, &th)| (th, fractions.iter().map(|f| f.1[k]).sum::<f64>() / n as f64))
        .collect();
    density_csv(&mean, spec.mode, create_file(&dir.join("density.csv"))?)?;
    let mut files: Vec<String> = fractions.into_iter().flat_map(|f| f.0).collect();
    files.push("density.csv".into());
    close_stage(cfg, Stage::Sdf, files, serde_json::Value::Null)
}

fn load_samples(cfg: &PipelineConfig, ids: &[usize]) -> Result<Vec<SdfSampleSet>> {
    let dir = stage_dir(cfg, Stage::Sdf);
    ids.iter()
        .map(|&i| {
            let path = dir.join(format!("{}.nzs", geometry_name(i)));
            if !path.exists() {
                return Err(CliError::MissingArtifact(path));
            }
            Ok(read_sample_set(&path, i)?)
        })
        .collect()
}

/// Trains encoder and decoder on the training split; writes checkpoints and `loss.csv`.
pub fn cmd_pretrain(cfg: &PipelineConfig) -> Result<StageManifest> {
    let gen = gen_extra(cfg)?;
    require_stage(cfg, Stage::Sdf)?;
    let t = unit_transform(&gen.family_bounds)?;
    let train = gen.grid.train.clone();
    let data = PretrainDataset {
        graphs: load_graphs(cfg, &train, &t)?,
        sets: load_samples(cfg, &train)?,
        ids: train,
    };
    let dir = open_stage(cfg, Stage::Pretrain)?;
    let model = PretrainModel::new(cfg.model.clone())?;
    log::info!(
        "pretraining {} parameters on {} geometries for {} steps",
        model.param_count(),
        data.len(),
        cfg.training.iterations
    );
    let trainer = pretrain(&data, model, &cfg.training, Some(&dir))?;
    write_loss_csv(&trainer.curve, create_file(&dir.join("loss.csv"))?)?;
    let mut files: Vec<String> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json" && n != "config.json")
        .collect();
    files.sort();
    close_stage(cfg, Stage::Pretrain, files, serde_json::Value::Null)
}

fn load_model(cfg: &PipelineConfig) -> Result<PretrainModel> {
    require_stage(cfg, Stage::Pretrain)?;
    let path = stage_dir(cfg, Stage::Pretrain).join("final.tkpt");
    if !path.exists() {
        return Err(CliError::MissingArtifact(path));
    }
    Ok(PretrainModel::load(&path)?.0)
}

/// Latent codes of every geometry in the grid, in grid order.
pub fn all_latents(cfg: &PipelineConfig, model: &PretrainModel) -> Result<(DesignGrid, Vec<Vec<f64>>)> {
    let gen = gen_extra(cfg)?;
    let t = unit_transform(&gen.family_bounds)?;
    let ids: Vec<usize> = (0..gen.grid.entries.len()).collect();
    let graphs = load_graphs(cfg, &ids, &t)?;
    Ok((gen.grid, encode_all(model, &graphs, 16)?))
}

/// Linear probe from latent codes to normalized design parameters.
pub fn cmd_probe(cfg: &PipelineConfig) -> Result<StageManifest> {
    let model = load_model(cfg)?;
    let (grid, latents) = all_latents(cfg, &model)?;
    let dir = open_stage(cfg, Stage::Probe)?;
    let params: Vec<[f64; 4]> = (0..grid.entries.len()).map(|i| grid.normalized_params(i)).collect();
    let report = linear_probe(&latents, &params, &grid.train, &grid.test)?;
    let names = cfg.family.param_names();
    write_json(&dir.join("probe.json"), &report)?;
    report.write_scatter_csv(&names, create_file(&dir.join("scatter.csv"))?)?;
    let mut w = create_file(&dir.join("r2.csv"))?;
    writeln!(w, "param,r2_train,r2_test")?;
    for (k, name) in names.iter().enumerate() {
        writeln!(w, "{name},{},{}", report.r2_train[k], report.r2_test[k])?;
    }
    w.flush()?;
    let mut w = create_file(&dir.join("latents.csv"))?;
    let header: Vec<String> = (0..latents[0].len()).map(|j| format!("z{j}")).collect();
    writeln!(w, "geometry,split,{}", header.join(","))?;
    for (i, z) in latents.iter().enumerate() {
        let split = if grid.test.contains(&i) { "test" } else { "train" };
        let vals: Vec<String> = z.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{i},{split},{}", vals.join(","))?;
    }
    w.flush()?;
    for (k, name) in names.iter().enumerate() {
        log::info!(
            "R^2 {name}: train {:.4} test {:.4}",
            report.r2_train[k],
            report.r2_test[k]
        );
    }
    close_stage(
        cfg,
        Stage::Probe,
        ["probe.json", "scatter.csv", "r2.csv", "latents.csv"]
            .map(String::from)
            .to_vec(),
        serde_json::Value::Null,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconRecord {
    pub geometry: usize,
    pub resolution: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub chamfer: f64,
    pub runtime_secs: f64,
}

/// Marching-cubes reconstruction of selected geometries from their latent codes.
pub fn cmd_recon(
    cfg: &PipelineConfig,
    geometries: Option<Vec<usize>>,
    resolution: Option<usize>,
) -> Result<StageManifest> {
    let model = load_model(cfg)?;
    let gen = gen_extra(cfg)?;
    let t = unit_transform(&gen.family_bounds)?;
    let res = resolution.unwrap_or(cfg.eval.recon_resolution);
    let ids = match geometries.unwrap_or_else(|| cfg.eval.recon_geometries.clone()) {
        v if v.is_empty() => gen
            .grid
            .test
            .first()
            .or(gen.grid.train.first())
            .copied()
            .into_iter()
            .collect(),
        v => v,
    };
    if let Some(&bad) = ids.iter().find(|&&i| i >= gen.grid.entries.len()) {
        return Err(CliError::Usage(format!("geometry {bad} is not in the design grid")));
    }
    let dir = open_stage(cfg, Stage::Recon)?;
    let mut records = Vec::new();
    let mut files = Vec::new();
    for &i in &ids {
        let latent = model.encode(&load_graph(cfg, i, &t)?)?;
        let reference = load_normalized_mesh(cfg, i, &t)?;
        let rep = reconstruct(&model, &latent, res, Some(&reference))?;
        let name = format!("{}_r{res}.obj", geometry_name(i));
        let mut w = create_file(&dir.join(&name))?;
        rep.mesh.write_obj(&mut w)?;
        w.flush()?;
        files.push(name);
        records.push(ReconRecord {
            geometry: i,
            resolution: res,
            vertices: rep.mesh.vertices.len(),
            triangles: rep.mesh.triangles.len(),
            chamfer: rep.chamfer.unwrap_or(f64::NAN),
            runtime_secs: rep.runtime_secs,
        });
    }
    write_json(&dir.join("recon.json"), &records)?;
    let mut w = create_file(&dir.join("recon.csv"))?;
    writeln!(w, "geometry,resolution,vertices,triangles,chamfer")?;
    for r in &records {
        writeln!(
            w,
            "{},{},{},{},{:e}",
            r.geometry, r.resolution, r.vertices, r.triangles, r.chamfer
        )?;
    }
    w.flush()?;
    files.extend(["recon.json".to_string(), "recon.csv".to_string()]);
    close_stage(cfg, Stage::Recon, files, serde_json::Value::Null)
}

/// Few-shot sweep; latent strategies run only when a pretrained model exists.
pub fn cmd_downstream(cfg: &PipelineConfig) -> Result<StageManifest> {
    let gen = gen_extra(cfg)?;
    let model = match stage_dir(cfg, Stage::Pretrain).join("final.tkpt").exists() {
        true => Some(load_model(cfg)?),
        false => {
            log::warn!("no pretrained checkpoint; running parametric and scratch strategies only");
            None
        }
    };
    let dir = open_stage(cfg, Stage::Downstream)?;
    let (train, test) = (gen.grid.train.clone(), gen.grid.test.clone());
    let source = GridSource::generate(gen.grid, cfg.downstream.n_nodes, cfg.downstream.node_seed)?;
    let runs = run_sweep(&source, model.as_ref(), &train, &test, &cfg.downstream.sweep)?;
    write_results_csv(&runs, create_file(&dir.join("results.csv"))?)?;
    write_json(&dir.join("results.json"), &runs)?;
    fs::write(dir.join("sweep.svg"), sweep_svg(&runs))?;
    close_stage(
        cfg,
        Stage::Downstream,
        ["results.csv", "results.json", "sweep.svg"].map(String::from).to_vec(),
        serde_json::Value::Null,
    )
}

fn read_density(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|_| CliError::MissingArtifact(path.to_path_buf()))?;
    Ok(text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let mut it = l.split(',');
            Some((it.next()?.to_string(), it.next()?.to_string()))
        })
        .collect())
}

/// Consolidated markdown and CSV summary of every completed stage.
///
/// Fails when a stage directory was produced by a different configuration.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut present = Vec::new();
    for stage in Stage::ALL {
        let path = stage_dir(cfg, stage).join("manifest.json");
        if path.exists() {
            require_stage(cfg, stage)?;
            present.push(stage);
        }
    }
    if !present.contains(&Stage::Gen) {
        return Err(CliError::MissingArtifact(
            stage_dir(cfg, Stage::Gen).join("manifest.json"),
        ));
    }
    let dir = cfg.out_dir.join("report");
    fs::create_dir_all(&dir)?;
    let mut md = String::from("# Run summary\n\n| stage | config hash |\n|---|---|\n");
    let mut csv = String::from("section,key,value\n");
    for &s in &present {
        md.push_str(&format!("| {} | `{}` |\n", s.dir_name(), &cfg.stage_hash(s)[..16]));
        csv.push_str(&format!("stage,{},{}\n", s.dir_name(), cfg.stage_hash(s)));
    }

    if present.contains(&Stage::Probe) {
        let probe: ProbeReport = read_json(&stage_dir(cfg, Stage::Probe).join("probe.json"))?;
        let names = cfg.family.param_names();
        md.push_str("\n## Linear probe (R^2)\n\n| parameter | train | test |\n|---|---|---|\n");
        for (k, name) in names.iter().enumerate() {
            md.push_str(&format!(
                "| {name} | {:.4} | {:.4} |\n",
                probe.r2_train[k], probe.r2_test[k]
            ));
            csv.push_str(&format!("probe_r2_train,{name},{}\n", probe.r2_train[k]));
            csv.push_str(&format!("probe_r2_test,{name},{}\n", probe.r2_test[k]));
        }
        if probe.ridge {
            md.push_str("\nThe ridge fallback was used (rank-deficient training design).\n");
        }
    }
    if present.contains(&Stage::Sdf) {
        let rows = read_density(&stage_dir(cfg, Stage::Sdf).join("density.csv"))?;
        md.push_str(
            "\n## Sampling density (fraction of samples with |V| < threshold)\n\n| threshold | fraction |\n|---|---|\n",
        );
        for (t, f) in rows {
            md.push_str(&format!("| {t} | {f} |\n"));
            csv.push_str(&format!("density,{t},{f}\n"));
        }
    }
    if present.contains(&Stage::Recon) {
        let recs: Vec<ReconRecord> = read_json(&stage_dir(cfg, Stage::Recon).join("recon.json"))?;
        md.push_str("\n## Reconstruction\n\n| geometry | resolution | triangles | Chamfer |\n|---|---|---|---|\n");
        for r in recs {
            md.push_str(&format!(
                "| {} | {} | {} | {:.4e} |\n",
                r.geometry, r.resolution, r.triangles, r.chamfer
            ));
            csv.push_str(&format!("recon_chamfer,{},{:e}\n", r.geometry, r.chamfer));
        }
    }
    if present.contains(&Stage::Downstream) {
        let runs: Vec<FewshotRun> = read_json(&stage_dir(cfg, Stage::Downstream).join("results.json"))?;
        let mut table: BTreeMap<(usize, &str), Vec<f64>> = BTreeMap::new();
        let mut strategies: Vec<&str> = Vec::new();
        for r in &runs {
            if !strategies.contains(&r.strategy.name()) {
                strategies.push(r.strategy.name());
            }
            table.entry((r.shots, r.strategy.name())).or_default().push(r.test_mse);
        }
        let mut shots: Vec<usize> = table.keys().map(|k| k.0).collect();
        shots.dedup();
        md.push_str("\n## Few-shot sweep (mean test MSE over seeds)\n\n| shots |");
        for s in &strategies {
            md.push_str(&format!(" {s} |"));
        }
        md.push_str(&format!("\n|---|{}\n", "---|".repeat(strategies.len())));
        for n in shots {
            md.push_str(&format!("| {n} |"));
            for s in &strategies {
                match table.get(&(n, s)) {
                    Some(v) => {
                        let m = v.iter().sum::<f64>() / v.len() as f64;
                        md.push_str(&format!(" {m:.4e} |"));
                        csv.push_str(&format!("fewshot_{s},{n},{m:e}\n"));
                    }
                    None => md.push_str(" |"),
                }
            }
            md.push('\n');
        }
    }
    fs::write(dir.join("summary.md"), md)?;
    fs::write(dir.join("summary.csv"), csv)?;
    Ok(dir)
}

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Experiment, Method};
use crate::error::{Error, Result};
use crate::fem::{assemble, solve_frf, FomSystem};
use crate::linalg::thin_qr;
use crate::mesh::{generate_structured_beam, generate_unstructured_hole, GeometryCase, GeometryParams, Mesh};
use crate::mor::{mean_relative_error, modal_truncation, RomSample};
use crate::morph::MorphMethod;
use crate::pmor::{
    adaptive_sample, align_sample, initial_points, principal_angles, zero_padded, AlignedSample, ClusterSet,
    PromModel, PromSettings, ReferenceMesh, SamplingResult,
};

/// Mesh of the experiment geometry at `p`.
pub fn generate_mesh(exp: &Experiment, params: &GeometryParams) -> Result<Mesh> {
    match params.case {
        GeometryCase::BeamPlate => generate_structured_beam(params, exp.element_size()),
        _ => generate_unstructured_hole(params, exp.element_size(), exp.seed),
    }
}

/// Full-order model of the experiment at `p`.
pub fn full_order_model(exp: &Experiment, p: &[f64]) -> Result<(GeometryParams, Mesh, FomSystem)> {
    let params = GeometryParams::new(exp.case, p.to_vec())?;
    let mesh = generate_mesh(exp, &params)?;
    let fom = assemble(
        &mesh,
        &exp.material,
        &exp.fixed_group,
        &exp.input.at(&params),
        &exp.output.at(&params),
    )?;
    Ok((params, mesh, fom))
}

/// FOM and sampled ROM at one parameter point.
#[derive(Debug, Clone)]
pub struct SampleData {
    pub params: GeometryParams,
    pub mesh: Mesh,
    pub fom: FomSystem,
    pub rom: RomSample,
}

/// Sampled models cached by parameter, shared by every method of a run.
pub struct SampleStore<'a> {
    exp: &'a Experiment,
    cache: BTreeMap<Vec<u64>, SampleData>,
    pub seconds: f64,
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

impl<'a> SampleStore<'a> {
    pub fn new(exp: &'a Experiment) -> Self {
        SampleStore {
            exp,
            cache: BTreeMap::new(),
            seconds: 0.0,
        }
    }

    pub fn get(&mut self, p: &[f64]) -> Result<&SampleData> {
        let k = key(p);
        if !self.cache.contains_key(&k) {
            let start = Instant::now();
            let (params, mesh, fom) = full_order_model(self.exp, p)?;
            let rom = modal_truncation(&fom, self.exp.order)?.with_parameter(p);
            log::info!("sampled p = {p:?}: {} dofs, f_r = {:.1} Hz", fom.n(), rom.eigfreqs.last().copied().unwrap_or(0.0));
            self.cache.insert(k.clone(), SampleData { params, mesh, fom, rom });
            self.seconds += start.elapsed().as_secs_f64();
        }
        Ok(&self.cache[&k])
    }

    pub fn cached(&self, p: &[f64]) -> Option<&SampleData> {
        self.cache.get(&key(p))
    }
}

/// Reference mesh: the initial sample whose mesh has the most nodes.
pub fn choose_reference(store: &mut SampleStore<'_>, initial: &[Vec<f64>]) -> Result<ReferenceMesh> {
    let mut best: Option<(usize, ReferenceMesh)> = None;
    for p in initial {
        let s = store.get(p)?;
        if best.as_ref().map_or(true, |(n, _)| s.mesh.n_nodes() > *n) {
            best = Some((
                s.mesh.n_nodes(),
                ReferenceMesh {
                    params: s.params.clone(),
                    mesh: s.mesh.clone(),
                    free_dofs: s.fom.free_dofs.clone(),
                },
            ));
        }
    }
    best.map(|(_, r)| r).ok_or_else(|| Error::InvalidInput("no initial samples".into()))
}

/// Identity and subspace checks of one sample's transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformCheck {
    pub sample: usize,
    pub cluster: usize,
    /// `max |(R^T Q_k)(S_k T_k) - I|`.
    pub identity_error: f64,
    /// Largest principal angle between `span(Q_k S_k T_k)` and `span(Q_k)`, degrees.
    pub max_angle: f64,
    pub condition: f64,
}

/// Evaluates [`TransformCheck`] for every sample used by `model`.
pub fn transform_checks(model: &PromModel, aligned: &[AlignedSample]) -> Result<Vec<TransformCheck>> {
    let mut out = Vec::new();
    for (c, cluster) in model.clusters.iter().enumerate() {
        for ((&k, t), &condition) in cluster.samples.iter().zip(&cluster.transforms).zip(&cluster.conditions) {
            let s = &aligned[k];
            let tp = &s.s * t;
            let id = cluster.common_basis.transpose() * &s.q * &tp;
            let mut identity_error = 0.0f64;
            for i in 0..id.nrows() {
                for j in 0..id.ncols() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    identity_error = identity_error.max((id[(i, j)] - e).abs());
                }
            }
            let (rotated, _) = thin_qr((&s.q * &tp).as_ref());
            let angles = principal_angles(rotated.as_ref(), s.q.as_ref())?;
            out.push(TransformCheck {
                sample: k,
                cluster: c,
                identity_error,
                max_angle: angles.first().copied().unwrap_or(0.0),
                condition,
            });
        }
    }
    Ok(out)
}

/// Outcome of one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub samples: usize,
    pub clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub converged: bool,
    pub excluded_samples: Vec<usize>,
    pub max_mre: f64,
    pub mean_mre: f64,
    pub max_identity_error: f64,
    pub max_transform_angle: f64,
    /// Largest characteristic-node residual over all morphs.
    pub max_morph_residual: f64,
    pub error: Option<String>,
    pub sampling_seconds: f64,
    pub build_seconds: f64,
}

impl MethodSummary {
    fn failed(method: Method, error: String) -> Self {
        MethodSummary {
            method,
            samples: 0,
            clusters: 0,
            cluster_sizes: Vec::new(),
            converged: false,
            excluded_samples: Vec::new(),
            max_mre: f64::NAN,
            mean_mre: f64::NAN,
            max_identity_error: f64::NAN,
            max_transform_angle: f64::NAN,
            max_morph_residual: f64::NAN,
            error: Some(error),
            sampling_seconds: 0.0,
            build_seconds: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestPointResult {
    pub p: Vec<f64>,
    pub n_dofs: usize,
    /// Mean relative FRF error per method; `NaN` when prediction failed.
    pub mre: BTreeMap<Method, f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub sample_models: f64,
    pub reference_frf: f64,
    pub reduced_frf: f64,
    pub total: f64,
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub case: GeometryCase,
    pub scale: f64,
    pub element_size: f64,
    pub frequencies: usize,
    pub reference: Vec<f64>,
    pub reference_dofs: usize,
    pub methods: Vec<MethodSummary>,
    pub points: Vec<TestPointResult>,
    pub timings: StageTimings,
    #[serde(skip)]
    pub models: BTreeMap<Method, PromModel>,
    #[serde(skip)]
    pub sampling: BTreeMap<Method, SamplingResult>,
    #[serde(skip)]
    pub transform_checks: BTreeMap<Method, Vec<TransformCheck>>,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// MRE of `method` at the test point equal to `p`.
    pub fn mre_at(&self, method: Method, p: &[f64]) -> Option<f64> {
        self.points
            .iter()
            .find(|t| t.p.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12))
            .and_then(|t| t.mre.get(&method).copied())
    }
}

struct MethodRun {
    sampling: SamplingResult,
    model: PromModel,
    checks: Vec<TransformCheck>,
    morph_residual: f64,
    build_seconds: f64,
}

fn settings(exp: &Experiment) -> PromSettings {
    PromSettings {
        order: exp.order,
        mode: exp.interpolation,
        lambda: exp.lambda,
    }
}

fn run_morph_method(
    exp: &Experiment,
    store: &mut SampleStore<'_>,
    reference: &ReferenceMesh,
    method: MorphMethod,
) -> Result<MethodRun> {
    let bounds = exp.bounds();
    let mut aligned: Vec<AlignedSample> = Vec::new();
    let mut source = |p: &[f64]| -> Result<faer::Mat<f64>> {
        let s = store.get(p)?;
        let a = align_sample(reference, &s.params, &s.mesh, &s.fom.free_dofs, s.rom.clone(), method)?;
        let q = a.q.clone();
        aligned.push(a);
        Ok(q)
    };
    let sampling = adaptive_sample(&mut source, &bounds, &initial_points(&bounds), &exp.hyper, exp.max_samples)?;
    let start = Instant::now();
    let model = PromModel::build(&aligned, &sampling.clusters, &bounds, settings(exp))?;
    let build_seconds = start.elapsed().as_secs_f64();
    let checks = transform_checks(&model, &aligned)?;
    let morph_residual = aligned
        .iter()
        .filter_map(|a| a.morph.map(|m| m.residual))
        .fold(0.0, f64::max);
    Ok(MethodRun {
        sampling,
        model,
        checks,
        morph_residual,
        build_seconds,
    })
}

fn run_zero_pad(exp: &Experiment, store: &mut SampleStore<'_>, points: &[Vec<f64>]) -> Result<MethodRun> {
    let bounds = exp.bounds();
    let roms: Vec<RomSample> = points.iter().map(|p| Ok(store.get(p)?.rom.clone())).collect::<Result<_>>()?;
    let aligned = zero_padded(&roms)?;
    let clusters = ClusterSet {
        clusters: vec![(0..points.len()).collect()],
        edges: Vec::new(),
        hyper: exp.hyper,
    };
    let start = Instant::now();
    let model = PromModel::build(&aligned, &clusters, &bounds, settings(exp))?;
    let build_seconds = start.elapsed().as_secs_f64();
    let checks = transform_checks(&model, &aligned)?;
    Ok(MethodRun {
        sampling: SamplingResult {
            points: points.to_vec(),
            clusters,
            angles: Vec::new(),
            converged: true,
            bases: Vec::new(),
        },
        model,
        checks,
        morph_residual: 0.0,
        build_seconds,
    })
}

fn summarize(method: Method, run: &MethodRun, sampling_seconds: f64) -> MethodSummary {
    let c = &run.sampling.clusters.clusters;
    MethodSummary {
        method,
        samples: run.sampling.points.len(),
        clusters: c.len(),
        cluster_sizes: c.iter().map(Vec::len).collect(),
        converged: run.sampling.converged,
        excluded_samples: run.model.clusters.iter().flat_map(|m| m.excluded.iter().copied()).collect(),
        max_mre: f64::NAN,
        mean_mre: f64::NAN,
        max_identity_error: run.checks.iter().map(|c| c.identity_error).fold(0.0, f64::max),
        max_transform_angle: run.checks.iter().map(|c| c.max_angle).fold(0.0, f64::max),
        max_morph_residual: run.morph_residual,
        error: None,
        sampling_seconds,
        build_seconds: run.build_seconds,
    }
}

/// Runs sampling and model building for every method in `exp.methods`, then
/// sweeps the test points comparing each pROM with the full-order model.
///
/// A failing method is recorded in its summary; the others continue. The
/// zero-padding baseline reuses the samples of the RBF run, or of the SAEH
/// run when RBF is not requested.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    exp.validate()?;
    let total = Instant::now();
    let freqs = exp.frequencies.values()?;
    let bounds = exp.bounds();
    let mut store = SampleStore::new(exp);
    let reference = choose_reference(&mut store, &initial_points(&bounds))?;
    log::info!(
        "{}: reference p = {:?} with {} free dofs",
        exp.name,
        reference.params.p,
        reference.free_dofs.len()
    );

    let mut methods = exp.methods.clone();
    methods.sort();
    methods.dedup();
    let mut summaries = Vec::new();
    let mut runs: BTreeMap<Method, MethodRun> = BTreeMap::new();
    for &method in &methods {
        let start = Instant::now();
        let outcome = match method {
            Method::Saeh => run_morph_method(exp, &mut store, &reference, MorphMethod::Saeh { steps: exp.saeh_steps }),
            Method::Rbf => run_morph_method(exp, &mut store, &reference, MorphMethod::Rbf { order: exp.rbf_order }),
            Method::ZeroPad => {
                let points = runs
                    .get(&Method::Rbf)
                    .or_else(|| runs.get(&Method::Saeh))
                    .map(|r| r.sampling.points.clone());
                match points {
                    Some(points) => run_zero_pad(exp, &mut store, &points),
                    None => Err(Error::InvalidInput(
                        "the zero-padding baseline reuses the samples of a saeh or rbf run".into(),
                    )),
                }
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(run) => {
                log::info!(
                    "{method}: {} samples, {} clusters in {seconds:.1} s",
                    run.sampling.points.len(),
                    run.sampling.clusters.clusters.len()
                );
                summaries.push(summarize(method, &run, seconds));
                runs.insert(method, run);
            }
            Err(e) => {
                log::error!("{method} failed: {e}");
                summaries.push(MethodSummary::failed(method, e.to_string()));
            }
        }
    }

    let mut timings = StageTimings::default();
    let mut points = Vec::new();
    for p in exp.test_points() {
        let start = Instant::now();
        let (n_dofs, reference_y) = match store.cached(&p) {
            Some(s) => (s.fom.n(), solve_frf(&s.fom, &freqs)?),
            None => {
                let (_, _, fom) = full_order_model(exp, &p)?;
                (fom.n(), solve_frf(&fom, &freqs)?)
            }
        };
        timings.reference_frf += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let mut mre = BTreeMap::new();
        for (&method, run) in &runs {
            let value = run
                .model
                .predict(&p)
                .map(|rom| rom.frf(&freqs).y)
                .and_then(|y| mean_relative_error(&reference_y, &y))
                .map(|e| e.mean)
                .unwrap_or_else(|e| {
                    log::warn!("{method} prediction at {p:?} failed: {e}");
                    f64::NAN
                });
            mre.insert(method, value);
        }
        timings.reduced_frf += start.elapsed().as_secs_f64();
        log::info!("test point {p:?}: {mre:?}");
        points.push(TestPointResult { p, n_dofs, mre });
    }

    for s in &mut summaries {
        if s.error.is_some() {
            continue;
        }
        let values: Vec<f64> = points.iter().filter_map(|t| t.mre.get(&s.method).copied()).collect();
        if !values.is_empty() {
            s.max_mre = if values.iter().any(|v| v.is_nan()) {
                f64::NAN
            } else {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            s.mean_mre = values.iter().sum::<f64>() / values.len() as f64;
        }
    }
    timings.sample_models = store.seconds;
    timings.total = total.elapsed().as_secs_f64();

    let reference_dofs = reference.free_dofs.len();
    let mut models = BTreeMap::new();
    let mut sampling = BTreeMap::new();
    let mut checks = BTreeMap::new();
    for (method, run) in runs {
        models.insert(method, run.model);
        sampling.insert(method, run.sampling);
        checks.insert(method, run.checks);
    }
    Ok(ExperimentResult {
        name: exp.name.clone(),
        case: exp.case,
        scale: exp.scale,
        element_size: exp.element_size(),
        frequencies: freqs.len(),
        reference: reference.params.p,
        reference_dofs,
        methods: summaries,
        points,
        timings,
        models,
        sampling,
        transform_checks: checks,
    })
}

/// Writes `results.csv` (columns: parameters, method, mre, n_dofs) and
/// `summary.json` into `dir`.
pub fn write_outputs(exp: &Experiment, result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut header: Vec<String> = exp.case.parameter_names().iter().map(|s| s.to_string()).collect();
    header.extend(["method", "mre", "n_dofs"].map(String::from));
    w.write_record(&header)?;
    for t in &result.points {
        for (method, mre) in &t.mre {
            let mut row: Vec<String> = t.p.iter().map(|v| v.to_string()).collect();
            row.push(method.to_string());
            row.push(mre.to_string());
            row.push(t.n_dofs.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(result)?;
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

/// Threshold breaches of `result` against `exp.checks`, one message each.
pub fn evaluate_checks(exp: &Experiment, result: &ExperimentResult) -> Vec<String> {
    let c = &exp.checks;
    let mut breaches = Vec::new();
    let morph_based: Vec<&MethodSummary> = result
        .methods
        .iter()
        .filter(|m| matches!(m.method, Method::Saeh | Method::Rbf))
        .collect();
    let baseline = result.summary(Method::ZeroPad);
    for s in result.methods.iter().filter(|s| s.error.is_some()) {
        breaches.push(format!("{} failed: {}", s.method, s.error.as_deref().unwrap_or("")));
    }
    for s in morph_based.iter().filter(|s| s.error.is_none()) {
        let m = s.method;
        let mut fail = |ok: bool, msg: String| {
            if !ok {
                breaches.push(format!("{m}: {msg}"));
            }
        };
        if let Some(t) = c.max_mean_mre {
            fail(s.mean_mre < t, format!("mean MRE {} >= {t}", s.mean_mre));
        }
        if let Some(t) = c.max_mre {
            fail(s.max_mre < t, format!("max MRE {} >= {t}", s.max_mre));
        }
        if let Some(t) = c.min_samples {
            fail(s.samples >= t, format!("{} samples < {t}", s.samples));
        }
        if let Some(t) = c.max_samples {
            fail(s.samples <= t, format!("{} samples > {t}", s.samples));
        }
        if let Some(t) = c.min_clusters {
            fail(s.clusters >= t, format!("{} clusters < {t}", s.clusters));
        }
        if let Some(t) = c.max_clusters {
            fail(s.clusters <= t, format!("{} clusters > {t}", s.clusters));
        }
        if let (Some(t), Some(b)) = (c.min_baseline_ratio, baseline) {
            let ratio = b.mean_mre / s.mean_mre;
            fail(ratio >= t, format!("baseline ratio {ratio} < {t}"));
        }
        for pc in &c.points {
            let v = result.mre_at(m, &pc.p).unwrap_or(f64::NAN);
            fail(v < pc.max_mre, format!("MRE {v} at {:?} >= {}", pc.p, pc.max_mre));
        }
    }
    if let (Some(t), Some(b)) = (c.min_baseline_mre, baseline) {
        if !(b.mean_mre > t) {
            breaches.push(format!("zero-pad: mean MRE {} <= {t}", b.mean_mre));
        }
    }
    breaches
}

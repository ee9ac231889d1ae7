//! The multi-view evidential classifier: per-view alignment, private and
//! collaborative experts, a cross-view attention context, a routing network
//! over the experts, and weighted evidence fusion.
//!
//! A model is a [`ModelConfig`] plus a [`ParamStore`]; the two are kept
//! separate so optimizers and gradient checkers can mutate parameters while
//! the model stays borrowable. [`TmurModel::new`] creates both; `attach`
//! re-binds a config to an existing store (used when loading from disk).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::array::DenseArray;
use crate::autodiff::{cross_attention, linear, AttentionProjections, NodeId, ParamId, ParamStore, Tape};
use crate::data::Scaler;
use crate::error::{Result, TmurError};

/// What the routing network sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouterInput {
    /// Concatenated cross-view attention outputs (the full architecture).
    AttentionContext,
    /// Concatenated aligned views, attention disabled (ablation).
    RawConcat,
    /// Per-view total evidence only — a branch-local statistic. Used to
    /// demonstrate what routing loses when it cannot see joint structure.
    MarginalEvidence,
}

impl RouterInput {
    pub fn as_str(self) -> &'static str {
        match self {
            RouterInput::AttentionContext => "attention",
            RouterInput::RawConcat => "concat",
            RouterInput::MarginalEvidence => "marginal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "attention" => Ok(RouterInput::AttentionContext),
            "concat" => Ok(RouterInput::RawConcat),
            "marginal" => Ok(RouterInput::MarginalEvidence),
            other => Err(TmurError::parse(format!("unknown router input '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub num_views: usize,
    pub view_dims: Vec<usize>,
    pub num_classes: usize,
    /// Width every view is projected to.
    pub aligned_dim: usize,
    /// Hidden widths shared by expert and router MLPs.
    pub hidden_dims: Vec<usize>,
    /// Routing softmax temperature.
    pub temperature: f64,
    pub router_input: RouterInput,
}

const LAYER_NORM_EPS: f64 = 1e-5;

impl ModelConfig {
    /// Config with default widths: aligned dim 64, one hidden layer of 256,
    /// temperature 1, full attention context.
    pub fn new(view_dims: Vec<usize>, num_classes: usize) -> Self {
        ModelConfig {
            num_views: view_dims.len(),
            view_dims,
            num_classes,
            aligned_dim: 64,
            hidden_dims: vec![256],
            temperature: 1.0,
            router_input: RouterInput::AttentionContext,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_views == 0 {
            return Err(TmurError::config("model needs at least one view"));
        }
        if self.view_dims.len() != self.num_views {
            return Err(TmurError::config(format!(
                "{} view dims for {} views",
                self.view_dims.len(),
                self.num_views
            )));
        }
        if self.view_dims.iter().any(|&d| d == 0) || self.aligned_dim == 0 {
            return Err(TmurError::config("all dimensions must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(TmurError::config("model needs at least 2 classes"));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.iter().any(|&h| h == 0) {
            return Err(TmurError::config("hidden dims must be non-empty and positive"));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(TmurError::config(format!(
                "temperature must be finite and positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Private experts plus the collaborative one.
    pub fn num_experts(&self) -> usize {
        self.num_views + 1
    }

    fn router_in_dim(&self) -> usize {
        match self.router_input {
            RouterInput::AttentionContext | RouterInput::RawConcat => {
                self.num_views * self.aligned_dim
            }
            RouterInput::MarginalEvidence => self.num_views,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum InitKind {
    Xavier,
    Zeros,
    Ones,
}

struct ParamSpec {
    name: String,
    rows: usize,
    cols: usize,
    init: InitKind,
}

fn mlp_specs(prefix: &str, in_dim: usize, hidden: &[usize], out_dim: usize) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    let mut prev = in_dim;
    let mut dims: Vec<usize> = hidden.to_vec();
    dims.push(out_dim);
    for (i, &d) in dims.iter().enumerate() {
        specs.push(ParamSpec {
            name: format!("{prefix}/l{i}/w"),
            rows: prev,
            cols: d,
            init: InitKind::Xavier,
        });
        specs.push(ParamSpec {
            name: format!("{prefix}/l{i}/b"),
            rows: 1,
            cols: d,
            init: InitKind::Zeros,
        });
        prev = d;
    }
    specs
}

fn param_specs(config: &ModelConfig) -> Vec<ParamSpec> {
    let d = config.aligned_dim;
    let k = config.num_classes;
    let v = config.num_views;
    let mut specs = Vec::new();
    for (i, &dv) in config.view_dims.iter().enumerate() {
        specs.push(ParamSpec {
            name: format!("align{i}/w"),
            rows: dv,
            cols: d,
            init: InitKind::Xavier,
        });
        specs.push(ParamSpec {
            name: format!("align{i}/b"),
            rows: 1,
            cols: d,
            init: InitKind::Zeros,
        });
        specs.push(ParamSpec {
            name: format!("align{i}/gain"),
            rows: 1,
            cols: d,
            init: InitKind::Ones,
        });
        specs.push(ParamSpec {
            name: format!("align{i}/shift"),
            rows: 1,
            cols: d,
            init: InitKind::Zeros,
        });
    }
    for i in 0..v {
        specs.extend(mlp_specs(&format!("expert{i}"), d, &config.hidden_dims, d));
    }
    specs.extend(mlp_specs("collab", v * d, &config.hidden_dims, d));
    if config.router_input == RouterInput::AttentionContext {
        for name in ["attn/wq", "attn/wk", "attn/wv", "attn/wo"] {
            specs.push(ParamSpec {
                name: name.to_string(),
                rows: d,
                cols: d,
                init: InitKind::Xavier,
            });
        }
    }
    specs.extend(mlp_specs(
        "router",
        config.router_in_dim(),
        &config.hidden_dims,
        config.num_experts(),
    ));
    for i in 0..config.num_experts() {
        specs.push(ParamSpec {
            name: format!("head{i}/w"),
            rows: d,
            cols: k,
            init: InitKind::Xavier,
        });
        specs.push(ParamSpec {
            name: format!("head{i}/b"),
            rows: 1,
            cols: k,
            init: InitKind::Zeros,
        });
    }
    specs
}

#[derive(Clone, Debug)]
struct AlignIds {
    w: ParamId,
    b: ParamId,
    gain: ParamId,
    shift: ParamId,
}

#[derive(Clone, Debug)]
struct MlpIds {
    layers: Vec<(ParamId, ParamId)>,
}

#[derive(Clone, Debug)]
struct AttnIds {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
}

#[derive(Clone, Debug)]
struct Layout {
    align: Vec<AlignIds>,
    experts: Vec<MlpIds>,
    collab: MlpIds,
    attn: Option<AttnIds>,
    router: MlpIds,
    heads: Vec<(ParamId, ParamId)>,
}

/// One forward pass, as tape nodes. Values live on the tape; gradients flow
/// back through every field.
#[derive(Debug)]
pub struct ForwardOutput {
    /// Aligned per-view features, each B×d.
    pub aligned: Vec<NodeId>,
    /// Router context (width depends on the router input mode).
    pub context: NodeId,
    /// Evidence per expert (private views first, collaborative last), B×K.
    pub expert_evidence: Vec<NodeId>,
    /// Unit-normalized private hidden features, B×d each.
    pub normalized_private: Vec<NodeId>,
    /// Routing weights, B×(V+1), rows on the simplex.
    pub routing: NodeId,
    /// Fused evidence Σ_i π_i e^(i), B×K.
    pub fused_evidence: NodeId,
}

/// Batch predictions from the fused opinion.
#[derive(Clone, Debug)]
pub struct PredictionBatch {
    pub labels: Vec<usize>,
    /// Expected class probabilities α/S, one row per sample.
    pub probabilities: DenseArray,
    /// Predictive uncertainty K/S per sample.
    pub uncertainty: Vec<f64>,
}

pub struct TmurModel {
    config: ModelConfig,
    layout: Layout,
}

impl TmurModel {
    /// Build a freshly initialized model. Weights are Xavier-uniform seeded
    /// per parameter name, biases zero, layer-norm affine at identity.
    pub fn new(config: ModelConfig, seed: u64) -> Result<(Self, ParamStore)> {
        config.validate()?;
        let mut store = ParamStore::new();
        for spec in param_specs(&config) {
            match spec.init {
                InitKind::Xavier => {
                    store.register_xavier(&spec.name, spec.rows, spec.cols, seed)?
                }
                InitKind::Zeros => store.register_zeros(&spec.name, spec.rows, spec.cols)?,
                InitKind::Ones => store.register_ones(&spec.name, spec.rows, spec.cols)?,
            };
        }
        let model = TmurModel::attach(config, &store)?;
        Ok((model, store))
    }

    /// Bind a config to parameters that already exist (e.g. loaded from a
    /// file), verifying the store holds every expected shape.
    pub fn attach(config: ModelConfig, store: &ParamStore) -> Result<Self> {
        config.validate()?;
        let resolve = |name: &str, rows: usize, cols: usize| -> Result<ParamId> {
            let id = store
                .find(name)
                .ok_or_else(|| TmurError::state(format!("missing parameter '{name}'")))?;
            let p = store.get(id);
            if p.value.shape() != (rows, cols) {
                return Err(TmurError::shape(format!(
                    "parameter '{name}' is {:?}, expected ({rows}, {cols})",
                    p.value.shape()
                )));
            }
            Ok(id)
        };

        let d = config.aligned_dim;
        let mut align = Vec::new();
        for (i, &dv) in config.view_dims.iter().enumerate() {
            align.push(AlignIds {
                w: resolve(&format!("align{i}/w"), dv, d)?,
                b: resolve(&format!("align{i}/b"), 1, d)?,
                gain: resolve(&format!("align{i}/gain"), 1, d)?,
                shift: resolve(&format!("align{i}/shift"), 1, d)?,
            });
        }

        let resolve_mlp = |prefix: &str, in_dim: usize, out_dim: usize| -> Result<MlpIds> {
            let mut layers = Vec::new();
            let mut prev = in_dim;
            let mut dims = config.hidden_dims.clone();
            dims.push(out_dim);
            for (i, &width) in dims.iter().enumerate() {
                let w = resolve(&format!("{prefix}/l{i}/w"), prev, width)?;
                let b = resolve(&format!("{prefix}/l{i}/b"), 1, width)?;
                layers.push((w, b));
                prev = width;
            }
            Ok(MlpIds { layers })
        };

        let experts = (0..config.num_views)
            .map(|i| resolve_mlp(&format!("expert{i}"), d, d))
            .collect::<Result<Vec<_>>>()?;
        let collab = resolve_mlp("collab", config.num_views * d, d)?;
        let attn = if config.router_input == RouterInput::AttentionContext {
            Some(AttnIds {
                wq: resolve("attn/wq", d, d)?,
                wk: resolve("attn/wk", d, d)?,
                wv: resolve("attn/wv", d, d)?,
                wo: resolve("attn/wo", d, d)?,
            })
        } else {
            None
        };
        let router = resolve_mlp("router", config.router_in_dim(), config.num_experts())?;
        let heads = (0..config.num_experts())
            .map(|i| {
                Ok((
                    resolve(&format!("head{i}/w"), d, config.num_classes)?,
                    resolve(&format!("head{i}/b"), 1, config.num_classes)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(TmurModel {
            config,
            layout: Layout {
                align,
                experts,
                collab,
                attn,
                router,
                heads,
            },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn mlp(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        input: NodeId,
        ids: &MlpIds,
    ) -> Result<NodeId> {
        let mut x = input;
        let last = ids.layers.len() - 1;
        for (i, &(w, b)) in ids.layers.iter().enumerate() {
            let wn = tape.param(store, w);
            let bn = tape.param(store, b);
            x = linear(tape, x, wn, bn)?;
            if i < last {
                x = tape.softplus(x);
            }
        }
        Ok(x)
    }

    fn check_views(&self, views: &[DenseArray]) -> Result<usize> {
        if views.len() != self.config.num_views {
            return Err(TmurError::shape(format!(
                "{} views supplied, model expects {}",
                views.len(),
                self.config.num_views
            )));
        }
        let batch = views[0].rows();
        for (v, view) in views.iter().enumerate() {
            if view.rows() != batch {
                return Err(TmurError::shape(format!(
                    "view {v} has {} rows, view 0 has {batch}",
                    view.rows()
                )));
            }
            if view.cols() != self.config.view_dims[v] {
                return Err(TmurError::shape(format!(
                    "view {v} has width {}, model expects {}",
                    view.cols(),
                    self.config.view_dims[v]
                )));
            }
        }
        if batch == 0 {
            return Err(TmurError::shape("empty batch"));
        }
        Ok(batch)
    }

    /// Run the full architecture on one batch, recording onto `tape`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        views: &[DenseArray],
    ) -> Result<ForwardOutput> {
        self.check_views(views)?;

        // Per-view alignment: linear projection then layer norm.
        let mut aligned = Vec::with_capacity(self.config.num_views);
        for (v, view) in views.iter().enumerate() {
            let ids = &self.layout.align[v];
            let x = tape.leaf(view.clone());
            let w = tape.param(store, ids.w);
            let b = tape.param(store, ids.b);
            let projected = linear(tape, x, w, b)?;
            let gain = tape.param(store, ids.gain);
            let shift = tape.param(store, ids.shift);
            let h = tape.layer_norm(projected, gain, shift, LAYER_NORM_EPS)?;
            aligned.push(h);
        }
        let concat = tape.concat_cols(&aligned)?;

        // Experts. Private experts consume their own aligned view only; the
        // collaborative expert consumes the concatenation.
        let mut hidden = Vec::with_capacity(self.config.num_experts());
        for (v, ids) in self.layout.experts.iter().enumerate() {
            hidden.push(self.mlp(tape, store, aligned[v], ids)?);
        }
        hidden.push(self.mlp(tape, store, concat, &self.layout.collab)?);

        let mut expert_evidence = Vec::with_capacity(self.config.num_experts());
        for (i, &(w, b)) in self.layout.heads.iter().enumerate() {
            let wn = tape.param(store, w);
            let bn = tape.param(store, b);
            let logits = linear(tape, hidden[i], wn, bn)?;
            expert_evidence.push(tape.softplus(logits));
        }

        let normalized_private: Vec<NodeId> = hidden[..self.config.num_views]
            .iter()
            .map(|&z| tape.row_l2_normalize(z))
            .collect();

        // Router context.
        let context = match self.config.router_input {
            RouterInput::AttentionContext => {
                let attn = self.layout.attn.as_ref().expect("attention ids present");
                let proj = AttentionProjections {
                    query: tape.param(store, attn.wq),
                    key: tape.param(store, attn.wk),
                    value: tape.param(store, attn.wv),
                    output: tape.param(store, attn.wo),
                };
                let mut mixed = Vec::with_capacity(self.config.num_views);
                for &h in &aligned {
                    mixed.push(cross_attention(tape, h, &aligned, &aligned, &proj)?);
                }
                tape.concat_cols(&mixed)?
            }
            RouterInput::RawConcat => concat,
            RouterInput::MarginalEvidence => {
                let totals: Vec<NodeId> = expert_evidence[..self.config.num_views]
                    .iter()
                    .map(|&e| tape.row_sum(e))
                    .collect();
                tape.concat_cols(&totals)?
            }
        };

        let logits = self.mlp(tape, store, context, &self.layout.router)?;
        let routing = tape.softmax_rows(logits, self.config.temperature)?;

        // Fused evidence: convex combination of expert evidence.
        let mut fused = None;
        for (i, &e) in expert_evidence.iter().enumerate() {
            let weight = tape.extract_col(routing, i)?;
            let term = tape.mul_col_vec(e, weight)?;
            fused = Some(match fused {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
        }
        let fused_evidence = fused.expect("at least one expert");

        Ok(ForwardOutput {
            aligned,
            context,
            expert_evidence,
            normalized_private,
            routing,
            fused_evidence,
        })
    }

    /// Inference: fused opinion summaries without keeping the tape.
    pub fn predict(&self, store: &ParamStore, views: &[DenseArray]) -> Result<PredictionBatch> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, views)?;
        let fused = tape.value(out.fused_evidence).clone();
        Ok(predictions_from_evidence(&fused))
    }
}

/// Convert a batch of evidence rows into labels, expected probabilities, and
/// uncertainties. Ties break toward the lowest class index.
pub fn predictions_from_evidence(evidence: &DenseArray) -> PredictionBatch {
    let k = evidence.cols();
    let mut labels = Vec::with_capacity(evidence.rows());
    let mut probabilities = DenseArray::zeros(evidence.rows(), k);
    let mut uncertainty = Vec::with_capacity(evidence.rows());
    for r in 0..evidence.rows() {
        let strength: f64 = evidence.row(r).iter().map(|e| e + 1.0).sum();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for c in 0..k {
            let p = (evidence.get(r, c) + 1.0) / strength;
            probabilities.set(r, c, p);
            if p > best.0 {
                best = (p, c);
            }
        }
        labels.push(best.1);
        uncertainty.push(k as f64 / strength);
    }
    PredictionBatch {
        labels,
        probabilities,
        uncertainty,
    }
}

/// A trained model plus everything needed to reproduce its predictions:
/// config, parameters, the feature scaler, and the training seed.
pub struct SavedModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub scaler: Scaler,
    pub seed: u64,
}

impl SavedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = String::new();
        let c = &self.config;
        text.push_str("tmur-model-v1\n");
        let _ = writeln!(text, "seed {}", self.seed);
        let _ = writeln!(text, "classes {}", c.num_classes);
        let _ = writeln!(text, "aligned_dim {}", c.aligned_dim);
        let _ = writeln!(text, "temperature {:.16e}", c.temperature);
        let _ = writeln!(text, "router {}", c.router_input.as_str());
        let _ = writeln!(text, "view_dims {}", join_usize(&c.view_dims));
        let _ = writeln!(text, "hidden_dims {}", join_usize(&c.hidden_dims));
        for (v, (mean, std)) in self.scaler.means.iter().zip(&self.scaler.stds).enumerate() {
            let _ = writeln!(text, "scaler_mean {v} {}", join_floats(mean));
            let _ = writeln!(text, "scaler_std {v} {}", join_floats(std));
        }
        for (_, p) in self.params.iter() {
            let _ = writeln!(
                text,
                "param {} {} {}",
                p.name,
                p.value.rows(),
                p.value.cols()
            );
            let _ = writeln!(text, "{}", join_floats(p.value.data()));
        }
        text.push_str("end\n");
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SavedModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| TmurError::data(format!("cannot read model {}: {e}", path.display())))?;
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l))
                .ok_or_else(|| TmurError::parse(format!("{}: unexpected end, wanted {what}", path.display())))
        };

        let (_, magic) = next("header")?;
        if magic.trim() != "tmur-model-v1" {
            return Err(TmurError::parse(format!(
                "{}: not a model file (bad header)",
                path.display()
            )));
        }
        let mut seed = None;
        let mut classes = None;
        let mut aligned_dim = None;
        let mut temperature = None;
        let mut router = None;
        let mut view_dims: Option<Vec<usize>> = None;
        let mut hidden_dims: Option<Vec<usize>> = None;
        let mut means: Vec<Vec<f64>> = Vec::new();
        let mut stds: Vec<Vec<f64>> = Vec::new();
        let mut params = ParamStore::new();

        loop {
            let (lineno, line) = next("model body")?;
            let line = line.trim();
            if line == "end" {
                break;
            }
            let err = |msg: &str| TmurError::parse(format!("{}:{lineno}: {msg}", path.display()));
            let mut parts = line.split_whitespace();
            let key = parts.next().ok_or_else(|| err("blank line in model body"))?;
            let rest: Vec<&str> = parts.collect();
            match key {
                "seed" => seed = Some(parse_token::<u64>(&rest, 0, "seed", lineno, path)?),
                "classes" => classes = Some(parse_token::<usize>(&rest, 0, "classes", lineno, path)?),
                "aligned_dim" => {
                    aligned_dim = Some(parse_token::<usize>(&rest, 0, "aligned_dim", lineno, path)?)
                }
                "temperature" => {
                    temperature = Some(parse_token::<f64>(&rest, 0, "temperature", lineno, path)?)
                }
                "router" => {
                    router = Some(RouterInput::parse(
                        rest.first().ok_or_else(|| err("router needs a mode"))?,
                    )?)
                }
                "view_dims" => view_dims = Some(parse_all::<usize>(&rest, "view_dims", lineno, path)?),
                "hidden_dims" => {
                    hidden_dims = Some(parse_all::<usize>(&rest, "hidden_dims", lineno, path)?)
                }
                "scaler_mean" => {
                    let v = parse_token::<usize>(&rest, 0, "view index", lineno, path)?;
                    if v != means.len() {
                        return Err(err("scaler views out of order"));
                    }
                    means.push(parse_all::<f64>(&rest[1..], "scaler mean", lineno, path)?);
                }
                "scaler_std" => {
                    let v = parse_token::<usize>(&rest, 0, "view index", lineno, path)?;
                    if v != stds.len() {
                        return Err(err("scaler views out of order"));
                    }
                    stds.push(parse_all::<f64>(&rest[1..], "scaler std", lineno, path)?);
                }
                "param" => {
                    if rest.len() != 3 {
                        return Err(err("param lines are 'param <name> <rows> <cols>'"));
                    }
                    let rows = parse_token::<usize>(&rest, 1, "rows", lineno, path)?;
                    let cols = parse_token::<usize>(&rest, 2, "cols", lineno, path)?;
                    let (vline, values) = next("parameter values")?;
                    let data = parse_all::<f64>(
                        &values.split_whitespace().collect::<Vec<_>>(),
                        "parameter values",
                        vline,
                        path,
                    )?;
                    let value = DenseArray::from_vec(rows, cols, data)?;
                    params.register(rest[0], value)?;
                }
                other => return Err(err(&format!("unknown key '{other}'"))),
            }
        }

        let missing = |what: &str| TmurError::parse(format!("{}: missing {what}", path.display()));
        let view_dims = view_dims.ok_or_else(|| missing("view_dims"))?;
        let config = ModelConfig {
            num_views: view_dims.len(),
            view_dims,
            num_classes: classes.ok_or_else(|| missing("classes"))?,
            aligned_dim: aligned_dim.ok_or_else(|| missing("aligned_dim"))?,
            hidden_dims: hidden_dims.ok_or_else(|| missing("hidden_dims"))?,
            temperature: temperature.ok_or_else(|| missing("temperature"))?,
            router_input: router.ok_or_else(|| missing("router"))?,
        };
        // Attach validates config and every parameter shape.
        TmurModel::attach(config.clone(), &params)?;
        Ok(SavedModel {
            config,
            params,
            scaler: Scaler { means, stds },
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// 17 significant digits: enough for an exact f64 round trip.
fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_token<T: std::str::FromStr>(
    rest: &[&str],
    idx: usize,
    what: &str,
    lineno: usize,
    path: &Path,
) -> Result<T> {
    rest.get(idx)
        .and_then(|t| t.parse::<T>().ok())
        .ok_or_else(|| TmurError::parse(format!("{}:{lineno}: invalid {what}", path.display())))
}

fn parse_all<T: std::str::FromStr>(
    rest: &[&str],
    what: &str,
    lineno: usize,
    path: &Path,
) -> Result<Vec<T>> {
    rest.iter()
        .map(|t| {
            t.parse::<T>().map_err(|_| {
                TmurError::parse(format!("{}:{lineno}: invalid {what} entry '{t}'", path.display()))
            })
        })
        .collect()
}

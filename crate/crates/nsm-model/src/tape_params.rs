//! Tape-resident mirror of [`ModelParams`](crate::params::ModelParams).
//!
//! Every learnable tensor is registered as a leaf on an autodiff tape so that
//! a backward pass can produce gradients for all of them. The mirror exposes
//! the same traversal order as the parameter store, which lets an optimizer
//! zip parameters, gradients, and names positionally.

use autodiff_tensor::{Tape, Tensor, Var};

use crate::config::ModelConfig;
use crate::params::{
    BnLayer, DgcnnParams, DiscriminatorParams, LinearParams, ModelParams, ProjLayer,
    RegressorParams, TransformerParams,
};

/// Dense layer on the tape.
#[derive(Clone, Copy)]
pub struct TapeLinear<'t> {
    pub w: Var<'t>,
    pub b: Var<'t>,
}

impl<'t> TapeLinear<'t> {
    fn new(tape: &'t Tape, p: &LinearParams) -> Self {
        TapeLinear {
            w: tape.leaf(p.w.clone()),
            b: tape.leaf(p.b.clone()),
        }
    }

    /// Applies `x · w + b`.
    pub fn apply(&self, x: Var<'t>) -> Var<'t> {
        x.matmul(self.w).add_row(self.b)
    }
}

/// Batch-norm layer on the tape; running statistics stay plain numbers.
#[derive(Clone)]
pub struct TapeBn<'t> {
    pub gamma: Var<'t>,
    pub beta: Var<'t>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl<'t> TapeBn<'t> {
    fn new(tape: &'t Tape, p: &BnLayer) -> Self {
        TapeBn {
            gamma: tape.leaf(p.gamma.clone()),
            beta: tape.leaf(p.beta.clone()),
            running_mean: p.running_mean.clone(),
            running_var: p.running_var.clone(),
        }
    }
}

/// Edge-convolution layer on the tape.
#[derive(Clone)]
pub struct TapeEdgeConv<'t> {
    pub lin: TapeLinear<'t>,
    pub bn: TapeBn<'t>,
}

/// Graph encoder on the tape.
#[derive(Clone)]
pub struct TapeDgcnn<'t> {
    pub layers: Vec<TapeEdgeConv<'t>>,
}

impl<'t> TapeDgcnn<'t> {
    fn new(tape: &'t Tape, p: &DgcnnParams) -> Self {
        TapeDgcnn {
            layers: p
                .layers
                .iter()
                .map(|l| TapeEdgeConv {
                    lin: TapeLinear::new(tape, &l.lin),
                    bn: TapeBn::new(tape, &l.bn),
                })
                .collect(),
        }
    }
}

/// Attention projection on the tape.
#[derive(Clone, Copy)]
pub struct TapeProj<'t> {
    pub lin: TapeLinear<'t>,
    pub ln_gamma: Var<'t>,
    pub ln_beta: Var<'t>,
}

impl<'t> TapeProj<'t> {
    fn new(tape: &'t Tape, p: &ProjLayer) -> Self {
        TapeProj {
            lin: TapeLinear::new(tape, &p.lin),
            ln_gamma: tape.leaf(p.ln.gamma.clone()),
            ln_beta: tape.leaf(p.ln.beta.clone()),
        }
    }

    /// Linear, ReLU, layer norm.
    pub fn apply(&self, x: Var<'t>) -> Var<'t> {
        self.lin.apply(x).relu().layer_norm(self.ln_gamma, self.ln_beta)
    }
}

/// The six correlation projections on the tape.
#[derive(Clone, Copy)]
pub struct TapeTransformer<'t> {
    pub self_q: TapeProj<'t>,
    pub self_k: TapeProj<'t>,
    pub self_v: TapeProj<'t>,
    pub cross_q: TapeProj<'t>,
    pub cross_k: TapeProj<'t>,
    pub cross_v: TapeProj<'t>,
}

impl<'t> TapeTransformer<'t> {
    fn new(tape: &'t Tape, p: &TransformerParams) -> Self {
        TapeTransformer {
            self_q: TapeProj::new(tape, &p.self_q),
            self_k: TapeProj::new(tape, &p.self_k),
            self_v: TapeProj::new(tape, &p.self_v),
            cross_q: TapeProj::new(tape, &p.cross_q),
            cross_k: TapeProj::new(tape, &p.cross_k),
            cross_v: TapeProj::new(tape, &p.cross_v),
        }
    }
}

/// Pose regressor on the tape.
#[derive(Clone)]
pub struct TapeRegressor<'t> {
    pub shared: TapeLinear<'t>,
    pub shared_bn: TapeBn<'t>,
    pub quat: TapeLinear<'t>,
    pub trans: TapeLinear<'t>,
}

impl<'t> TapeRegressor<'t> {
    fn new(tape: &'t Tape, p: &RegressorParams) -> Self {
        TapeRegressor {
            shared: TapeLinear::new(tape, &p.shared),
            shared_bn: TapeBn::new(tape, &p.shared_bn),
            quat: TapeLinear::new(tape, &p.quat),
            trans: TapeLinear::new(tape, &p.trans),
        }
    }
}

/// Discriminator on the tape.
#[derive(Clone)]
pub struct TapeDiscriminator<'t> {
    pub dgcnn: TapeDgcnn<'t>,
    pub fc: TapeLinear<'t>,
}

impl<'t> TapeDiscriminator<'t> {
    fn new(tape: &'t Tape, p: &DiscriminatorParams) -> Self {
        TapeDiscriminator {
            dgcnn: TapeDgcnn::new(tape, &p.dgcnn),
            fc: TapeLinear::new(tape, &p.fc),
        }
    }
}

/// One implicit-surface layer on the tape.
#[derive(Clone)]
pub struct TapeSdfLayer<'t> {
    pub lin: TapeLinear<'t>,
    pub bn: Option<TapeBn<'t>>,
}

/// The whole network registered on one tape.
#[derive(Clone)]
pub struct TapeModel<'t> {
    pub config: ModelConfig,
    pub encoder: TapeDgcnn<'t>,
    pub transformer: TapeTransformer<'t>,
    pub regressor: TapeRegressor<'t>,
    pub discriminator: TapeDiscriminator<'t>,
    pub sdf: Vec<TapeSdfLayer<'t>>,
}

impl<'t> TapeModel<'t> {
    /// Registers every learnable tensor of `params` as a tape leaf.
    pub fn new(tape: &'t Tape, params: &ModelParams) -> Self {
        TapeModel {
            config: params.config.clone(),
            encoder: TapeDgcnn::new(tape, &params.encoder),
            transformer: TapeTransformer::new(tape, &params.transformer),
            regressor: TapeRegressor::new(tape, &params.regressor),
            discriminator: TapeDiscriminator::new(tape, &params.discriminator),
            sdf: params
                .sdf
                .layers
                .iter()
                .map(|l| TapeSdfLayer {
                    lin: TapeLinear::new(tape, &l.lin),
                    bn: l.bn.as_ref().map(|bn| TapeBn::new(tape, bn)),
                })
                .collect(),
        }
    }

    /// Visits the learnable leaves in the same order as
    /// [`ModelParams::visit_learnable`].
    pub fn visit_learnable(&self, f: &mut dyn FnMut(&str, Var<'t>)) {
        let visit_dgcnn = |prefix: &str, net: &TapeDgcnn<'t>, f: &mut dyn FnMut(&str, Var<'t>)| {
            for (i, layer) in net.layers.iter().enumerate() {
                f(&format!("{prefix}.layer{i}.w"), layer.lin.w);
                f(&format!("{prefix}.layer{i}.b"), layer.lin.b);
                f(&format!("{prefix}.layer{i}.bn.gamma"), layer.bn.gamma);
                f(&format!("{prefix}.layer{i}.bn.beta"), layer.bn.beta);
            }
        };
        let visit_proj = |prefix: &str, p: &TapeProj<'t>, f: &mut dyn FnMut(&str, Var<'t>)| {
            f(&format!("{prefix}.w"), p.lin.w);
            f(&format!("{prefix}.b"), p.lin.b);
            f(&format!("{prefix}.ln.gamma"), p.ln_gamma);
            f(&format!("{prefix}.ln.beta"), p.ln_beta);
        };
        visit_dgcnn("encoder", &self.encoder, f);
        let t = &self.transformer;
        visit_proj("transformer.self_q", &t.self_q, f);
        visit_proj("transformer.self_k", &t.self_k, f);
        visit_proj("transformer.self_v", &t.self_v, f);
        visit_proj("transformer.cross_q", &t.cross_q, f);
        visit_proj("transformer.cross_k", &t.cross_k, f);
        visit_proj("transformer.cross_v", &t.cross_v, f);
        let r = &self.regressor;
        f("regressor.shared.w", r.shared.w);
        f("regressor.shared.b", r.shared.b);
        f("regressor.shared.bn.gamma", r.shared_bn.gamma);
        f("regressor.shared.bn.beta", r.shared_bn.beta);
        f("regressor.quat.w", r.quat.w);
        f("regressor.quat.b", r.quat.b);
        f("regressor.trans.w", r.trans.w);
        f("regressor.trans.b", r.trans.b);
        visit_dgcnn("discriminator", &self.discriminator.dgcnn, f);
        f("discriminator.fc.w", self.discriminator.fc.w);
        f("discriminator.fc.b", self.discriminator.fc.b);
        for (i, layer) in self.sdf.iter().enumerate() {
            f(&format!("sdf.layer{i}.w"), layer.lin.w);
            f(&format!("sdf.layer{i}.b"), layer.lin.b);
            if let Some(bn) = &layer.bn {
                f(&format!("sdf.layer{i}.bn.gamma"), bn.gamma);
                f(&format!("sdf.layer{i}.bn.beta"), bn.beta);
            }
        }
    }

    /// Learnable leaves in traversal order.
    pub fn learnable_vars(&self) -> Vec<Var<'t>> {
        let mut out = Vec::new();
        self.visit_learnable(&mut |_, v| out.push(v));
        out
    }

    /// Accumulated gradients of the learnable leaves in traversal order.
    pub fn gradients(&self) -> Vec<Tensor> {
        let mut out = Vec::new();
        self.visit_learnable(&mut |_, v| out.push(v.grad()));
        out
    }
}

/// True when a learnable-tensor name belongs to the discriminator.
pub fn is_discriminator_param(name: &str) -> bool {
    name.starts_with("discriminator.")
}

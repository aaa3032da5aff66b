use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Linear, ParamSet};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph, Normalization};
use crate::numcore::{Matrix, SparseAdj, Tape, Var};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backbone {
    Gcn,
    Sgc,
    Sage,
    Mlp,
}

impl Backbone {
    pub const ALL: [Backbone; 4] = [Backbone::Gcn, Backbone::Sgc, Backbone::Sage, Backbone::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Backbone::Gcn => "gcn",
            Backbone::Sgc => "sgc",
            Backbone::Sage => "sage",
            Backbone::Mlp => "mlp",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown backbone '{s}'")))
    }

    /// `(fan_in, fan_out)` per layer.
    fn layer_dims(self, d_x: usize, d_h: usize, d_c: usize) -> Vec<(usize, usize)> {
        match self {
            Backbone::Gcn | Backbone::Mlp => vec![(d_x, d_h), (d_h, d_c)],
            Backbone::Sgc => vec![(d_x, d_c)],
            Backbone::Sage => vec![(2 * d_x, d_h), (2 * d_h, d_c)],
        }
    }
}

/// Propagation operators of one graph, built once and shared by every
/// forward pass on it.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Symmetric normalization with self-loops.
    pub sym: SparseAdj,
    /// Row-normalized neighbor mean.
    pub mean: SparseAdj,
}

impl Propagation {
    pub fn new(graph: &Graph) -> Self {
        Self {
            sym: normalized_adjacency(graph, Normalization::SymSelfLoop),
            mean: normalized_adjacency(graph, Normalization::MeanRowStochastic),
        }
    }
}

/// Parameters of a two-layer node classifier (SGC has a single linear map
/// after two propagation hops).
#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub backbone: Backbone,
    pub layers: Vec<Linear>,
}

impl GnnParams {
    pub fn init(backbone: Backbone, d_x: usize, d_h: usize, d_c: usize, rng: &mut rng::Rng) -> Self {
        let layers = backbone
            .layer_dims(d_x, d_h, d_c)
            .into_iter()
            .map(|(i, o)| Linear::init(i, o, rng))
            .collect();
        Self { backbone, layers }
    }

    pub fn input_dim(&self) -> usize {
        let d = self.layers[0].in_dim();
        if self.backbone == Backbone::Sage {
            d / 2
        } else {
            d
        }
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, Linear::out_dim)
    }

    /// Records the parameters as tracked leaves in tensor order.
    pub fn record(&self, tape: &mut Tape<'_>) -> Vec<Var> {
        self.tensors()
            .into_iter()
            .map(|m| tape.param(m.clone()))
            .collect()
    }

    /// Row-softmaxed predictions for every node, recorded on `tape`.
    /// `params` comes from [`GnnParams::record`] (or constants of the same
    /// shapes) and `x` is the feature matrix.
    pub fn forward<'g>(
        &self,
        tape: &mut Tape<'g>,
        params: &[Var],
        prop: &'g Propagation,
        x: Var,
    ) -> Result<Var> {
        let rows = tape.value(x).rows();
        if rows != prop.sym.node_count() {
            return Err(Error::shape(
                "gnn_forward",
                format!("{rows} feature rows for {} nodes", prop.sym.node_count()),
            ));
        }
        if tape.value(x).cols() != self.input_dim() {
            return Err(Error::shape(
                "gnn_forward",
                format!(
                    "{} features for a {}-input model",
                    tape.value(x).cols(),
                    self.input_dim()
                ),
            ));
        }
        let logits = match self.backbone {
            Backbone::Gcn => {
                let ax = tape.spmm(&prop.sym, x)?;
                let h = Linear::apply_tape(tape, ax, params[0], params[1])?;
                let h = tape.relu(h);
                let ah = tape.spmm(&prop.sym, h)?;
                Linear::apply_tape(tape, ah, params[2], params[3])?
            }
            Backbone::Sgc => {
                let ax = tape.spmm(&prop.sym, x)?;
                let aax = tape.spmm(&prop.sym, ax)?;
                Linear::apply_tape(tape, aax, params[0], params[1])?
            }
            Backbone::Sage => {
                let mx = tape.spmm(&prop.mean, x)?;
                let cx = tape.concat_cols(x, mx)?;
                let h = Linear::apply_tape(tape, cx, params[0], params[1])?;
                let h = tape.relu(h);
                let mh = tape.spmm(&prop.mean, h)?;
                let ch = tape.concat_cols(h, mh)?;
                Linear::apply_tape(tape, ch, params[2], params[3])?
            }
            Backbone::Mlp => {
                let h = Linear::apply_tape(tape, x, params[0], params[1])?;
                let h = tape.relu(h);
                Linear::apply_tape(tape, h, params[2], params[3])?
            }
        };
        tape.row_softmax(logits)
    }

    /// Predictions without recording gradients.
    pub fn predict(&self, prop: &Propagation, features: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let params: Vec<Var> = self
            .tensors()
            .into_iter()
            .map(|m| tape.constant(m.clone()))
            .collect();
        let x = tape.constant(features.clone());
        let out = self.forward(&mut tape, &params, prop, x)?;
        Ok(tape.value(out).clone())
    }
}

impl ParamSet for GnnParams {
    fn tensors(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    fn names(&self) -> Vec<String> {
        (0..self.layers.len())
            .flat_map(|i| {
                [
                    format!("gnn.{}.layer{i}.weight", self.backbone.name()),
                    format!("gnn.{}.layer{i}.bias", self.backbone.name()),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(edges: &[(usize, usize)], n: usize, seed: u64) -> Graph {
        let mut r = rng::rng(seed, &[99]);
        let x = Linear::init(n, 3, &mut r).w;
        Graph::from_edges(edges, x, vec![None; n], 2).unwrap()
    }

    #[test]
    fn backbone_names_round_trip() {
        for b in Backbone::ALL {
            assert_eq!(Backbone::from_name(b.name()).unwrap(), b);
        }
        assert!(Backbone::from_name("gat").is_err());
    }

    #[test]
    fn mlp_ignores_edges() {
        let a = tiny(&[], 5, 1);
        let b = Graph::from_edges(
            &[(0, 1), (1, 2), (3, 4), (0, 4)],
            a.features().clone(),
            vec![None; 5],
            2,
        )
        .unwrap();
        let m = GnnParams::init(Backbone::Mlp, 3, 4, 2, &mut rng::rng(2, &[]));
        let pa = m.predict(&Propagation::new(&a), a.features()).unwrap();
        let pb = m.predict(&Propagation::new(&b), b.features()).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn gcn_on_isolated_node_is_mlp() {
        let g = tiny(&[], 1, 3);
        let gcn = GnnParams::init(Backbone::Gcn, 3, 4, 2, &mut rng::rng(4, &[]));
        let mlp = GnnParams {
            backbone: Backbone::Mlp,
            layers: gcn.layers.clone(),
        };
        let prop = Propagation::new(&g);
        let a = gcn.predict(&prop, g.features()).unwrap();
        let b = mlp.predict(&prop, g.features()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let g = tiny(&[(0, 1)], 2, 5);
        let m = GnnParams::init(Backbone::Sage, 4, 4, 2, &mut rng::rng(4, &[]));
        assert!(matches!(
            m.predict(&Propagation::new(&g), g.features()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn layer_shapes() {
        let m = GnnParams::init(Backbone::Sage, 3, 8, 2, &mut rng::rng(4, &[]));
        let shapes: Vec<_> = m.tensors().iter().map(|t| t.shape()).collect();
        assert_eq!(shapes, vec![(6, 8), (1, 8), (16, 2), (1, 2)]);
        assert_eq!(m.input_dim(), 3);
        let s = GnnParams::init(Backbone::Sgc, 3, 8, 2, &mut rng::rng(4, &[]));
        assert_eq!(s.tensors().len(), 2);
        assert_eq!(m.names()[2], "gnn.sage.layer1.weight");
    }
}

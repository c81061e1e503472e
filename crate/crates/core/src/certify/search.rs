//! Branch and bound over product boxes: certify a box when its bound clears
//! the target, otherwise bisect it and queue both halves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::bounds::{BoundParams, Prepared};
use super::certificate::{LeafRecord, LowerCertificate, LowerEnd, Node, SplitTree};
use super::interval::Interval;
use super::mp::{Enclosure, MpInterval};
use super::params::choose_parameters_prepared;
use super::product_box::ProductBox;
use crate::distributions::FinitePmf;
use crate::error::{Error, Result};
use crate::rational::{from_f64_exact, to_f64, Rational};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Maximum number of boxes evaluated, counting the root.
    pub budget: usize,
    /// Boxes popped and evaluated together.
    pub batch: usize,
    /// `α` alternatives tried per box on top of the central optimum.
    pub extra_alphas: usize,
    /// Precisions tried, in order, when the `f64` enclosure straddles the target.
    pub ladder: Vec<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 5_000_000,
            batch: 4096,
            extra_alphas: 0,
            ladder: vec![128, 256],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub evaluated: usize,
    pub leaves: usize,
    pub empty: usize,
    pub splits: usize,
    pub high_precision: usize,
    pub max_depth: u32,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Certified(LowerCertificate),
    /// The budget ran out; pending nodes of the tree form the frontier.
    BudgetExhausted(LowerCertificate),
}

impl SearchOutcome {
    pub fn certificate(&self) -> &LowerCertificate {
        match self {
            SearchOutcome::Certified(c) | SearchOutcome::BudgetExhausted(c) => c,
        }
    }

    pub fn into_certificate(self) -> LowerCertificate {
        match self {
            SearchOutcome::Certified(c) | SearchOutcome::BudgetExhausted(c) => c,
        }
    }
}

struct Work {
    deficit: f64,
    order: u64,
    node: usize,
    depth: u32,
    b: ProductBox,
}

impl PartialEq for Work {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Work {}

impl PartialOrd for Work {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Work {
    // Largest deficit first, then earliest creation.
    fn cmp(&self, o: &Self) -> Ordering {
        self.deficit
            .total_cmp(&o.deficit)
            .then_with(|| o.order.cmp(&self.order))
    }
}

enum Outcome {
    Empty,
    Leaf(LeafRecord),
    Split { coordinate: usize, deficit: f64 },
}

struct Context {
    p: Vec<f64>,
    e_q: f64,
    target: Rational,
    target_f: f64,
    fast: Prepared<Interval>,
    ladder: Vec<Prepared<MpInterval>>,
    extra_alphas: usize,
}

impl Context {
    fn clears(&self, lo: &Rational) -> bool {
        *lo >= self.target
    }

    fn evaluate(&self, b: &ProductBox) -> Result<Outcome> {
        if b.is_empty() {
            return Ok(Outcome::Empty);
        }
        let params =
            choose_parameters_prepared(&self.fast, &self.p, b, self.e_q, self.extra_alphas);
        let (value, vacuous) = self.fast.bound(b, &params)?;
        let (lo, hi) = (value.lo(), value.hi());
        if !vacuous && lo >= self.target_f - 1e-9 && self.clears(&from_f64_exact(lo)) {
            return Ok(leaf(&params, LowerEnd::Float(lo), 53));
        }
        if !vacuous && hi >= self.target_f {
            for prep in &self.ladder {
                let (v, vac) = prep.bound(b, &params)?;
                if vac {
                    break;
                }
                if let Some(lo) = v.lo_rational().filter(|l| self.clears(l)) {
                    return Ok(leaf(
                        &params,
                        LowerEnd::Exact(Box::new(lo)),
                        prep.bits() as u32,
                    ));
                }
            }
        }
        let coordinate = b.split_coordinate();
        let (l, u) = b.bounds(coordinate);
        if !(l < 0.5 * (l + u) && 0.5 * (l + u) < u) {
            return Err(Error::Domain(format!(
                "box {b:?} cannot be bisected further"
            )));
        }
        let deficit = if vacuous {
            f64::INFINITY
        } else {
            self.target_f - lo
        };
        Ok(Outcome::Split {
            coordinate,
            deficit,
        })
    }
}

fn leaf(params: &BoundParams, lo: LowerEnd, bits: u32) -> Outcome {
    Outcome::Leaf(LeafRecord {
        alpha: params.alpha,
        beta: params.beta.clone().into_boxed_slice(),
        lo,
        bits,
    })
}

/// Tries to prove `E_P(e_q) ≥ target` by covering the product set with
/// boxes whose bounds clear the target.
pub fn branch_and_bound(
    p: &FinitePmf,
    e_q: &Rational,
    target: &Rational,
    cfg: &SearchConfig,
) -> Result<(SearchOutcome, SearchStats)> {
    let start = LowerCertificate {
        p: p.clone(),
        e_q: e_q.clone(),
        value: target.clone(),
        tree: SplitTree::root(),
    };
    resume(start, cfg)
}

/// Continues a search from the pending nodes of a frontier certificate.
pub fn resume(
    frontier: LowerCertificate,
    cfg: &SearchConfig,
) -> Result<(SearchOutcome, SearchStats)> {
    if cfg.batch == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let p = &frontier.p;
    p.require_joint()?;
    let ctx = Context {
        p: p.probs().to_vec(),
        e_q: to_f64(&frontier.e_q),
        target: frontier.value.clone(),
        target_f: to_f64(&frontier.value),
        fast: Prepared::new(p, &frontier.e_q, 53)?,
        ladder: cfg
            .ladder
            .iter()
            .map(|&bits| Prepared::new(p, &frontier.e_q, bits))
            .collect::<Result<_>>()?,
        extra_alphas: cfg.extra_alphas,
    };
    let mut cert = frontier;
    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    let root = cert.root_box();
    cert.tree.walk(&root, |k, b, depth| {
        if matches!(cert.tree.node(k), Node::Pending) {
            heap.push(Work {
                deficit: f64::INFINITY,
                order,
                node: k,
                depth,
                b: b.clone(),
            });
            order += 1;
        }
        Ok(())
    })?;
    let mut stats = SearchStats::default();
    while !heap.is_empty() && stats.evaluated < cfg.budget {
        let take = cfg.batch.min(cfg.budget - stats.evaluated).min(heap.len());
        let batch: Vec<Work> = (0..take).filter_map(|_| heap.pop()).collect();
        let outcomes: Vec<Result<Outcome>> = batch.par_iter().map(|w| ctx.evaluate(&w.b)).collect();
        for (w, outcome) in batch.into_iter().zip(outcomes) {
            stats.evaluated += 1;
            stats.max_depth = stats.max_depth.max(w.depth);
            match outcome? {
                Outcome::Empty => {
                    stats.empty += 1;
                    cert.tree.set(w.node, Node::Empty);
                }
                Outcome::Leaf(rec) => {
                    stats.leaves += 1;
                    if rec.bits > 53 {
                        stats.high_precision += 1;
                    }
                    cert.tree.set(w.node, Node::Leaf(rec));
                }
                Outcome::Split {
                    coordinate,
                    deficit,
                } => {
                    stats.splits += 1;
                    let (first, second) = cert.tree.split(w.node, coordinate);
                    let (lo, hi) = w.b.split(coordinate);
                    for (node, b) in [(first, lo), (second, hi)] {
                        heap.push(Work {
                            deficit,
                            order,
                            node,
                            depth: w.depth + 1,
                            b,
                        });
                        order += 1;
                    }
                }
            }
        }
    }
    let outcome = if heap.is_empty() {
        SearchOutcome::Certified(cert)
    } else {
        SearchOutcome::BudgetExhausted(cert)
    };
    Ok((outcome, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::certificate::check_lower;
    use crate::distributions::Shape;

    fn rat(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    fn p2() -> FinitePmf {
        FinitePmf::from_rationals(
            Shape::Joint { rows: 2, cols: 2 },
            vec![rat(4, 10), rat(1, 10), rat(1, 10), rat(4, 10)],
        )
        .unwrap()
    }

    #[test]
    fn certifies_a_loose_target() {
        // E_P(0.01) is about 0.16 for this P; 0.1 leaves room.
        let cfg = SearchConfig {
            budget: 20_000,
            batch: 64,
            ..SearchConfig::default()
        };
        let (out, stats) = branch_and_bound(&p2(), &rat(1, 100), &rat(1, 10), &cfg).unwrap();
        let SearchOutcome::Certified(c) = out else {
            panic!("budget ran out: {stats:?}")
        };
        let report = check_lower(&c).unwrap();
        assert_eq!(report.leaves, stats.leaves);
        assert_eq!(c.box_count(), stats.leaves);
    }

    #[test]
    fn budget_exhaustion_then_resume() {
        let cfg = SearchConfig {
            budget: 5,
            batch: 2,
            ..SearchConfig::default()
        };
        let (out, _) = branch_and_bound(&p2(), &rat(1, 100), &rat(1, 10), &cfg).unwrap();
        let SearchOutcome::BudgetExhausted(front) = out else {
            panic!("expected a frontier")
        };
        assert!(front.tree.pending() > 0);
        assert!(check_lower(&front).is_err());
        let cfg = SearchConfig {
            budget: 20_000,
            batch: 64,
            ..SearchConfig::default()
        };
        let (out, _) = resume(front, &cfg).unwrap();
        assert!(check_lower(&out.into_certificate()).is_ok());
    }

    #[test]
    fn unreachable_target_exhausts_budget() {
        let cfg = SearchConfig {
            budget: 200,
            batch: 16,
            ..SearchConfig::default()
        };
        let (out, stats) = branch_and_bound(&p2(), &rat(1, 100), &rat(1, 1), &cfg).unwrap();
        assert!(matches!(out, SearchOutcome::BudgetExhausted(_)));
        assert_eq!(stats.evaluated, 200);
    }

    #[test]
    fn same_config_same_tree() {
        let cfg = SearchConfig {
            budget: 300,
            batch: 7,
            ..SearchConfig::default()
        };
        let a = branch_and_bound(&p2(), &rat(1, 100), &rat(1, 10), &cfg)
            .unwrap()
            .0;
        let b = branch_and_bound(&p2(), &rat(1, 100), &rat(1, 10), &cfg)
            .unwrap()
            .0;
        assert_eq!(a.certificate(), b.certificate());
    }
}

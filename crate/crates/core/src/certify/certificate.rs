//! Certificates, their text format, and an independent checker.
//!
//! A lower-bound certificate is the split tree of the search: internal nodes
//! name the bisected coordinate, leaves carry `(α, β, bound.lo)` and the
//! precision that proved them, and boxes missing the simplex are marked
//! empty. Boxes are never stored; the checker rebuilds each one from the root.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::interval::Interval;
use super::mp::{Enclosure, MpInterval};
use super::product_box::{box_extreme_points, ProductBox};
use crate::distributions::{FinitePmf, Shape};
use crate::error::{Error, Result};
use crate::rational::{self, format_rational, parse_rational, Rational};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "errexp-certificate";

/// `α` is stored as an integer multiple of `2^-ALPHA_SCALE`.
pub const ALPHA_SCALE: i32 = super::params::ALPHA_BITS;
/// `β` entries are stored as integer multiples of `2^-BETA_SCALE`.
pub const BETA_SCALE: i32 = super::params::BETA_BITS;

/// Lower endpoint of a certified box bound. Equality is by value, so a
/// float and the fraction it stands for are the same end.
#[derive(Clone, Debug)]
pub enum LowerEnd {
    Float(f64),
    Exact(Box<Rational>),
}

impl LowerEnd {
    pub fn to_rational(&self) -> Rational {
        match self {
            LowerEnd::Float(v) => rational::from_f64_exact(*v),
            LowerEnd::Exact(r) => (**r).clone(),
        }
    }
}

impl PartialEq for LowerEnd {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (LowerEnd::Float(a), LowerEnd::Float(b)) => a == b,
            _ => self.to_rational() == other.to_rational(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafRecord {
    pub alpha: f64,
    pub beta: Box<[f64]>,
    pub lo: LowerEnd,
    /// Precision of the enclosure that proved the bound; 53 means `f64`.
    pub bits: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Bisected along `coordinate`; the halves are `first_child` (lower)
    /// and `first_child + 1` (upper).
    Split {
        coordinate: u8,
        first_child: u32,
    },
    Leaf(LeafRecord),
    /// The box misses the product of simplices.
    Empty,
    /// Not yet processed (only in a resumable frontier).
    Pending,
}

/// Arena of nodes; node 0 is the full box. Two trees are equal when they
/// describe the same partition, whatever order their nodes were stored in.
#[derive(Clone, Debug, Default)]
pub struct SplitTree {
    nodes: Vec<Node>,
}

impl PartialEq for SplitTree {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            match (self.nodes.get(a), other.nodes.get(b)) {
                (
                    Some(Node::Split {
                        coordinate: ca,
                        first_child: fa,
                    }),
                    Some(Node::Split {
                        coordinate: cb,
                        first_child: fb,
                    }),
                ) if ca == cb => {
                    let (fa, fb) = (*fa as usize, *fb as usize);
                    stack.push((fa, fb));
                    stack.push((fa + 1, fb + 1));
                }
                (Some(Node::Split { .. }), _) | (_, Some(Node::Split { .. })) => return false,
                (x, y) if x == y => {}
                _ => return false,
            }
        }
        true
    }
}

impl SplitTree {
    pub fn root() -> Self {
        Self {
            nodes: vec![Node::Pending],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, k: usize) -> &Node {
        &self.nodes[k]
    }

    pub fn set(&mut self, k: usize, node: Node) {
        self.nodes[k] = node;
    }

    /// Marks `k` as split and appends two pending children.
    pub fn split(&mut self, k: usize, coordinate: usize) -> (usize, usize) {
        let first = self.nodes.len();
        self.nodes[k] = Node::Split {
            coordinate: coordinate as u8,
            first_child: first as u32,
        };
        self.nodes.push(Node::Pending);
        self.nodes.push(Node::Pending);
        (first, first + 1)
    }

    pub fn count(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(n)).count()
    }

    pub fn leaves(&self) -> usize {
        self.count(|n| matches!(n, Node::Leaf(_)))
    }

    pub fn pending(&self) -> usize {
        self.count(|n| matches!(n, Node::Pending))
    }

    /// Visits every node in preorder with its box and depth.
    pub fn walk(
        &self,
        root: &ProductBox,
        mut visit: impl FnMut(usize, &ProductBox, u32) -> Result<()>,
    ) -> Result<()> {
        let mut stack = vec![(0usize, root.clone(), 0u32)];
        while let Some((k, b, depth)) = stack.pop() {
            visit(k, &b, depth)?;
            if let Node::Split {
                coordinate,
                first_child,
            } = self.nodes[k]
            {
                let c = coordinate as usize;
                if c >= b.coordinate_count() {
                    return Err(Error::invalid(format!("node {k} splits coordinate {c}")));
                }
                let (lo, hi) = b.split(c);
                let first = first_child as usize;
                if first + 1 >= self.nodes.len() || first <= k {
                    return Err(Error::invalid(format!(
                        "node {k} has children out of range"
                    )));
                }
                stack.push((first + 1, hi, depth + 1));
                stack.push((first, lo, depth + 1));
            }
        }
        Ok(())
    }
}

/// Lower bound `E_P(e_q) ≥ value`, or a resumable frontier when the tree
/// still has pending nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerCertificate {
    pub p: FinitePmf,
    pub e_q: Rational,
    pub value: Rational,
    pub tree: SplitTree,
}

impl LowerCertificate {
    pub fn is_complete(&self) -> bool {
        self.tree.pending() == 0
    }

    pub fn root_box(&self) -> ProductBox {
        ProductBox::full(self.p.rows(), self.p.cols())
    }

    /// Number of boxes in the decomposition (leaves, empty or not).
    pub fn box_count(&self) -> usize {
        self.tree
            .count(|n| matches!(n, Node::Leaf(_) | Node::Empty))
    }
}

/// Upper bound `E_P(e_q) ≤ value` via the feasible witness `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperCertificate {
    pub p: FinitePmf,
    pub r: FinitePmf,
    pub e_q: Rational,
    pub value: Rational,
    pub bits: u32,
}

/// Two upper bounds and a lower bound at the midpoint that no convex
/// function can satisfy together.
#[derive(Clone, Debug, PartialEq)]
pub struct NonconvexityCertificate {
    pub upper: [UpperCertificate; 2],
    pub lower: LowerCertificate,
    pub gap: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    LowerBound(LowerCertificate),
    UpperBound(UpperCertificate),
    Nonconvexity(Box<NonconvexityCertificate>),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::LowerBound(_) => "lower_bound",
            Certificate::UpperBound(_) => "upper_bound",
            Certificate::Nonconvexity(_) => "nonconvexity",
        }
    }
}

// ---------------------------------------------------------------------------
// Text format

fn dyadic_numerator(v: f64, scale: i32) -> Result<i64> {
    let n = v * 2f64.powi(scale);
    if n.fract() != 0.0 || n.abs() >= 2f64.powi(62) {
        return Err(Error::invalid(format!(
            "{v} is not a multiple of 2^-{scale}"
        )));
    }
    Ok(n as i64)
}

fn write_header(
    out: &mut String,
    kind: &str,
    p: &FinitePmf,
    e_q: &Rational,
    value: &Rational,
) -> Result<()> {
    let exact = p
        .exact()
        .ok_or_else(|| Error::Precondition("certificates need a rational-backed PMF".into()))?;
    let _ = writeln!(out, "{MAGIC} {SCHEMA_VERSION}");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "shape {} {}", p.rows(), p.cols());
    let masses: Vec<String> = exact.iter().map(format_rational).collect();
    let _ = writeln!(out, "p {}", masses.join(" "));
    let _ = writeln!(out, "e_q {}", format_rational(e_q));
    let _ = writeln!(out, "value {}", format_rational(value));
    Ok(())
}

fn write_lower(out: &mut String, c: &LowerCertificate) -> Result<()> {
    write_header(out, "lower_bound", &c.p, &c.e_q, &c.value)?;
    let _ = writeln!(out, "alpha_scale {ALPHA_SCALE}");
    let _ = writeln!(out, "beta_scale {BETA_SCALE}");
    let _ = writeln!(out, "nodes {}", c.tree.len());
    let mut stack = vec![0usize];
    while let Some(k) = stack.pop() {
        match c.tree.node(k) {
            Node::Split {
                coordinate,
                first_child,
            } => {
                let _ = writeln!(out, "s {coordinate}");
                stack.push(*first_child as usize + 1);
                stack.push(*first_child as usize);
            }
            Node::Empty => out.push_str("e\n"),
            Node::Pending => out.push_str("p\n"),
            Node::Leaf(leaf) => {
                let _ = write!(
                    out,
                    "l {} {}",
                    leaf.bits,
                    dyadic_numerator(leaf.alpha, ALPHA_SCALE)?
                );
                for &b in leaf.beta.iter() {
                    let _ = write!(out, " {}", dyadic_numerator(b, BETA_SCALE)?);
                }
                let _ = writeln!(out, " {}", format_rational(&leaf.lo.to_rational()));
            }
        }
    }
    out.push_str("end\n");
    Ok(())
}

fn write_upper(out: &mut String, c: &UpperCertificate) -> Result<()> {
    write_header(out, "upper_bound", &c.p, &c.e_q, &c.value)?;
    let r =
        c.r.exact()
            .ok_or_else(|| Error::Precondition("the witness must be rational".into()))?;
    let _ = writeln!(out, "bits {}", c.bits);
    let masses: Vec<String> = r.iter().map(format_rational).collect();
    let _ = writeln!(out, "r {}", masses.join(" "));
    out.push_str("end\n");
    Ok(())
}

fn write_certificate(out: &mut String, c: &Certificate) -> Result<()> {
    match c {
        Certificate::LowerBound(l) => write_lower(out, l),
        Certificate::UpperBound(u) => write_upper(out, u),
        Certificate::Nonconvexity(n) => {
            let _ = writeln!(out, "{MAGIC} {SCHEMA_VERSION}");
            out.push_str("kind nonconvexity\n");
            let _ = writeln!(out, "gap {}", format_rational(&n.gap));
            write_upper(out, &n.upper[0])?;
            write_upper(out, &n.upper[1])?;
            write_lower(out, &n.lower)?;
            out.push_str("end\n");
            Ok(())
        }
    }
}

pub fn format_certificate(c: &Certificate) -> Result<String> {
    let mut out = String::new();
    write_certificate(&mut out, c)?;
    Ok(out)
}

pub fn write_certificate_file(path: impl AsRef<Path>, c: &Certificate) -> Result<()> {
    std::fs::write(path, format_certificate(c)?)?;
    Ok(())
}

pub fn read_certificate_file(path: impl AsRef<Path>) -> Result<Certificate> {
    parse_certificate(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(&'a str, Vec<&'a str>)> {
        for (k, raw) in self.inner.by_ref() {
            self.line = k + 1;
            let mut it = raw.split_whitespace();
            if let Some(key) = it.next() {
                return Ok((key, it.collect()));
            }
        }
        Err(Error::parse("certificate", "unexpected end of file"))
    }

    fn field(&self) -> String {
        format!("certificate line {}", self.line)
    }

    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (k, rest) = self.next()?;
        if k != key {
            return Err(Error::parse(
                self.field(),
                format!("expected {key:?}, found {k:?}"),
            ));
        }
        Ok(rest)
    }

    fn rational(&self, s: &str) -> Result<Rational> {
        parse_rational(s).map_err(|e| Error::parse(self.field(), e.to_string()))
    }

    fn int<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| Error::parse(self.field(), format!("{s:?} is not an integer")))
    }

    /// The single value on a line that must start with `key`.
    fn value(&mut self, key: &str) -> Result<&'a str> {
        let v = self.expect(key)?;
        self.one(&v)
    }

    fn rational_of(&mut self, key: &str) -> Result<Rational> {
        let v = self.value(key)?;
        self.rational(v)
    }

    fn int_of<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        self.int(v)
    }

    fn one(&self, v: &[&'a str]) -> Result<&'a str> {
        match v {
            [x] => Ok(x),
            _ => Err(Error::parse(self.field(), "expected one value")),
        }
    }
}

/// The common header after the kind line: `(p, e_q, value)`.
fn parse_header(lines: &mut Lines) -> Result<(FinitePmf, Rational, Rational)> {
    let shape = lines.expect("shape")?;
    let (rows, cols): (usize, usize) = match shape.as_slice() {
        [r, c] => (lines.int(r)?, lines.int(c)?),
        _ => return Err(Error::parse(lines.field(), "shape needs two sizes")),
    };
    let masses = lines
        .expect("p")?
        .iter()
        .map(|s| lines.rational(s))
        .collect::<Result<Vec<_>>>()?;
    let p = FinitePmf::from_rationals(Shape::Joint { rows, cols }, masses)?;
    let e_q = lines.rational_of("e_q")?;
    let value = lines.rational_of("value")?;
    Ok((p, e_q, value))
}

fn parse_magic(lines: &mut Lines) -> Result<()> {
    let v = lines.expect(MAGIC)?;
    let version: u32 = lines.int(lines.one(&v)?)?;
    if version != SCHEMA_VERSION {
        return Err(Error::parse(
            lines.field(),
            format!("unsupported schema version {version}"),
        ));
    }
    Ok(())
}

fn parse_lower_body(
    lines: &mut Lines,
    p: FinitePmf,
    e_q: Rational,
    value: Rational,
) -> Result<LowerCertificate> {
    let a_scale: i32 = lines.int_of("alpha_scale")?;
    let b_scale: i32 = lines.int_of("beta_scale")?;
    let count: usize = lines.int_of("nodes")?;
    let cells = p.len();
    let mut tree = SplitTree::root();
    // Preorder: each split is followed by its lower then its upper half.
    let mut todo = vec![0usize];
    while let Some(dst) = todo.pop() {
        if tree.len() > count {
            return Err(Error::parse(lines.field(), "more nodes than declared"));
        }
        let (key, rest) = lines.next()?;
        match key {
            "s" => {
                let coordinate: usize = lines.int(lines.one(&rest)?)?;
                if coordinate >= 2 * cells {
                    return Err(Error::parse(lines.field(), "split coordinate out of range"));
                }
                let (a, b) = tree.split(dst, coordinate);
                todo.push(b);
                todo.push(a);
            }
            "e" => tree.set(dst, Node::Empty),
            "p" => tree.set(dst, Node::Pending),
            "l" => {
                if rest.len() != cells + 3 {
                    return Err(Error::parse(
                        lines.field(),
                        format!("leaf needs {} fields", cells + 3),
                    ));
                }
                let bits: u32 = lines.int(rest[0])?;
                let alpha = lines.int::<i64>(rest[1])? as f64 * 2f64.powi(-a_scale);
                let beta = rest[2..2 + cells]
                    .iter()
                    .map(|s| Ok(lines.int::<i64>(s)? as f64 * 2f64.powi(-b_scale)))
                    .collect::<Result<Vec<f64>>>()?;
                let lo = lines.rational(rest[2 + cells])?;
                tree.set(
                    dst,
                    Node::Leaf(LeafRecord {
                        alpha,
                        beta: beta.into_boxed_slice(),
                        lo: LowerEnd::Exact(Box::new(lo)),
                        bits,
                    }),
                );
            }
            other => {
                return Err(Error::parse(
                    lines.field(),
                    format!("unknown node tag {other:?}"),
                ))
            }
        }
    }
    if tree.len() != count {
        return Err(Error::parse(
            lines.field(),
            format!("declared {count} nodes, found {}", tree.len()),
        ));
    }
    lines.expect("end")?;
    Ok(LowerCertificate {
        p,
        e_q,
        value,
        tree,
    })
}

fn parse_upper_body(
    lines: &mut Lines,
    p: FinitePmf,
    e_q: Rational,
    value: Rational,
) -> Result<UpperCertificate> {
    let bits: u32 = lines.int_of("bits")?;
    let masses = lines
        .expect("r")?
        .iter()
        .map(|s| lines.rational(s))
        .collect::<Result<Vec<_>>>()?;
    let r = FinitePmf::from_rationals(p.shape(), masses)?;
    lines.expect("end")?;
    Ok(UpperCertificate {
        p,
        r,
        e_q,
        value,
        bits,
    })
}

fn parse_one(lines: &mut Lines) -> Result<Certificate> {
    parse_magic(lines)?;
    let (key, rest) = lines.next()?;
    if key != "kind" {
        return Err(Error::parse(lines.field(), "expected kind"));
    }
    if lines.one(&rest)? == "nonconvexity" {
        let gap = lines.rational_of("gap")?;
        let mut upper = Vec::new();
        for _ in 0..2 {
            match parse_one(lines)? {
                Certificate::UpperBound(u) => upper.push(u),
                _ => return Err(Error::parse(lines.field(), "expected an upper_bound part")),
            }
        }
        let lower = match parse_one(lines)? {
            Certificate::LowerBound(l) => l,
            _ => return Err(Error::parse(lines.field(), "expected a lower_bound part")),
        };
        lines.expect("end")?;
        let upper: [UpperCertificate; 2] = upper.try_into().expect("two parts");
        return Ok(Certificate::Nonconvexity(Box::new(
            NonconvexityCertificate { upper, lower, gap },
        )));
    }
    let kind = lines.one(&rest)?.to_string();
    let (p, e_q, value) = parse_header(lines)?;
    match kind.as_str() {
        "lower_bound" => Ok(Certificate::LowerBound(parse_lower_body(
            lines, p, e_q, value,
        )?)),
        "upper_bound" => Ok(Certificate::UpperBound(parse_upper_body(
            lines, p, e_q, value,
        )?)),
        other => Err(Error::parse(
            lines.field(),
            format!("unknown certificate kind {other:?}"),
        )),
    }
}

pub fn parse_certificate(text: &str) -> Result<Certificate> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let c = parse_one(&mut lines)?;
    if lines.next().is_ok() {
        return Err(Error::parse(lines.field(), "trailing content"));
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// Checker

/// What the checker established.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub leaves: usize,
    pub empty: usize,
    pub max_depth: u32,
    /// Leaves proved at more than `f64` precision.
    pub high_precision_leaves: usize,
}

/// Exact rational bounds of a box (all coordinates are dyadic `f64`s).
fn exact_bounds(b: &ProductBox) -> [Vec<Rational>; 4] {
    b.to_rationals()
}

fn box_is_empty_exact(b: &ProductBox) -> bool {
    let [lx, ux, ly, uy] = exact_bounds(b);
    let one = Rational::one();
    let sum = |v: &[Rational]| v.iter().sum::<Rational>();
    sum(&lx) > one || sum(&ux) < one || sum(&ly) > one || sum(&uy) < one
}

/// The bound at a leaf recomputed from exact extreme points, independently
/// of the search code's `f64` vertex enumeration.
fn leaf_bound<E: Enclosure>(
    p: &[Rational],
    cols: usize,
    b: &ProductBox,
    leaf: &LeafRecord,
    e_q: &Rational,
    bits: usize,
) -> Result<Option<Rational>> {
    let [lx, ux, ly, uy] = exact_bounds(b);
    let xs = box_extreme_points(&lx, &ux)?;
    let ys = box_extreme_points(&ly, &uy)?;
    // A cell is live when some extreme point pair charges it.
    let live = |pts: &[Vec<Rational>], i: usize| pts.iter().any(|q| q[i].is_positive());
    let alpha = rational::from_f64_exact(leaf.alpha);
    let one = Rational::one();
    if !(alpha.is_positive() && alpha < one) {
        return Err(Error::invalid("leaf alpha outside (0, 1)"));
    }
    let a = E::from_rational(&alpha, bits);
    let inv = E::from_rational(&(one.clone() / &alpha), bits);
    let expo = E::from_rational(&(one - &alpha), bits);
    let beta: Vec<Rational> = leaf
        .beta
        .iter()
        .map(|&v| rational::from_f64_exact(v))
        .collect();
    if beta.iter().any(|v| v.is_negative()) {
        return Err(Error::invalid("leaf beta has a negative entry"));
    }
    let mut total = E::from_f64(0.0, bits);
    for (z, (pz, bz)) in p.iter().zip(&beta).enumerate() {
        if !(live(&xs, z / cols) && live(&ys, z % cols)) {
            continue;
        }
        let t = E::from_rational(pz, bits)
            .pow(&a)?
            .add(&E::from_rational(bz, bits));
        total = total.add(&t.pow(&inv)?);
    }
    let holder = total.pow(&a)?;
    let powers = |pts: &[Vec<Rational>]| -> Result<Vec<Vec<E>>> {
        pts.iter()
            .map(|q| {
                q.iter()
                    .map(|v| E::from_rational(v, bits).pow(&expo))
                    .collect()
            })
            .collect()
    };
    let (px, py) = (powers(&xs)?, powers(&ys)?);
    let mut d: Option<E> = None;
    for qx in &px {
        for qy in &py {
            let mut acc = E::from_f64(0.0, bits);
            for (z, bz) in beta.iter().enumerate() {
                if bz.is_zero() {
                    continue;
                }
                let w = qx[z / cols].mul(&qy[z % cols]);
                acc = acc.add(&E::from_rational(bz, bits).mul(&w));
            }
            d = Some(match d {
                None => acc,
                Some(m) => m.min(&acc),
            });
        }
    }
    let d = d.ok_or_else(|| Error::EmptyRegion("leaf box has no extreme points".into()))?;
    let brace = holder.sub(&d.lower_point());
    if !brace.lo_rational().is_some_and(|v| v.is_positive()) {
        return Ok(None);
    }
    let slope = expo.mul(&inv).mul(&E::from_rational(e_q, bits));
    let value = E::from_f64(0.0, bits)
        .sub(&brace.ln()?.mul(&inv))
        .sub(&slope);
    Ok(value.lo_rational())
}

/// Re-verifies a complete lower-bound certificate: every leaf's bound is
/// recomputed and compared with the claimed value, every empty box is
/// checked exactly, and the leaves are shown to tile the full box.
pub fn check_lower(c: &LowerCertificate) -> Result<CheckReport> {
    let exact_p =
        c.p.exact()
            .ok_or_else(|| Error::Precondition("certificate PMF must be rational".into()))?
            .to_vec();
    let cols = c.p.cols();
    let root = c.root_box();
    let mut report = CheckReport {
        leaves: 0,
        empty: 0,
        max_depth: 0,
        high_precision_leaves: 0,
    };
    // Volume bookkeeping: Σ 2^{-depth} over terminal nodes must be one,
    // accumulated exactly as an integer over 2^max_depth.
    let mut depth_counts: Vec<u64> = Vec::new();
    let mut failure: Option<Error> = None;
    c.tree.walk(&root, |k, b, depth| {
        report.max_depth = report.max_depth.max(depth);
        let terminal = |counts: &mut Vec<u64>| {
            if counts.len() <= depth as usize {
                counts.resize(depth as usize + 1, 0);
            }
            counts[depth as usize] += 1;
        };
        match c.tree.node(k) {
            Node::Pending => {
                return Err(Error::Precondition(format!(
                    "node {k} is still pending; the cover is incomplete"
                )));
            }
            Node::Split { coordinate, .. } => {
                let (l, u) = b.bounds(*coordinate as usize);
                if !(l < u) {
                    return Err(Error::invalid(format!(
                        "node {k} splits a degenerate coordinate"
                    )));
                }
                let (lo, hi) = b.split(*coordinate as usize);
                let c_ = *coordinate as usize;
                // The halves share exactly the midpoint face and agree elsewhere.
                let mid = lo.bounds(c_).1;
                let halves_ok = mid == hi.bounds(c_).0
                    && lo.bounds(c_).0 == l
                    && hi.bounds(c_).1 == u
                    && rational::from_f64_exact(mid) * Rational::from_integer(2.into())
                        == rational::from_f64_exact(l) + rational::from_f64_exact(u)
                    && (0..b.coordinate_count())
                        .filter(|&j| j != c_)
                        .all(|j| lo.bounds(j) == b.bounds(j) && hi.bounds(j) == b.bounds(j));
                if !halves_ok {
                    return Err(Error::invalid(format!(
                        "node {k} does not split at an exact midpoint"
                    )));
                }
            }
            Node::Empty => {
                terminal(&mut depth_counts);
                if !box_is_empty_exact(b) {
                    return Err(Error::invalid(format!(
                        "node {k} is marked empty but meets the simplex"
                    )));
                }
                report.empty += 1;
            }
            Node::Leaf(leaf) => {
                terminal(&mut depth_counts);
                report.leaves += 1;
                if box_is_empty_exact(b) {
                    return Ok(());
                }
                let bits = leaf.bits as usize;
                let got = if bits <= 53 {
                    leaf_bound::<Interval>(&exact_p, cols, b, leaf, &c.e_q, 53)?
                } else {
                    report.high_precision_leaves += 1;
                    leaf_bound::<MpInterval>(&exact_p, cols, b, leaf, &c.e_q, bits)?
                };
                let ok = got.as_ref().is_some_and(|v| *v >= c.value);
                if !ok && failure.is_none() {
                    failure = Some(Error::Precondition(format!(
                        "leaf {k} does not reach the claimed value (recomputed lower end {})",
                        got.map_or("-inf".to_string(), |v| format!(
                            "{:.17e}",
                            rational::to_f64(&v)
                        ))
                    )));
                }
                if leaf.lo.to_rational() < c.value && failure.is_none() {
                    failure = Some(Error::Precondition(format!(
                        "leaf {k} records a bound below the value"
                    )));
                }
            }
        }
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let max = depth_counts.len().saturating_sub(1);
    let total: BigInt = depth_counts
        .iter()
        .enumerate()
        .map(|(d, &n)| BigInt::from(n) << (max - d))
        .sum();
    if total != BigInt::one() << max {
        return Err(Error::invalid("leaf volumes do not add up to the full box"));
    }
    Ok(report)
}

/// Re-verifies any certificate. Lower bounds (alone or inside a
/// non-convexity certificate) yield the report of their tree.
pub fn check_certificate(c: &Certificate) -> Result<Option<CheckReport>> {
    match c {
        Certificate::LowerBound(l) => check_lower(l).map(Some),
        Certificate::UpperBound(u) => super::upper::check_upper(u).map(|_| None),
        Certificate::Nonconvexity(n) => {
            for u in &n.upper {
                super::upper::check_upper(u)?;
            }
            let report = check_lower(&n.lower)?;
            let rebuilt = super::upper::nonconvexity_certificate(n.upper.clone(), n.lower.clone())?;
            if rebuilt.gap != n.gap {
                return Err(Error::Precondition(format!(
                    "recorded gap {} differs from the recomputed {}",
                    format_rational(&n.gap),
                    format_rational(&rebuilt.gap)
                )));
            }
            Ok(Some(report))
        }
    }
}

//! AD overhead measurements.
//!
//! For each operation and size a random composition is generated from the
//! seed, then the operator and a plain `f64` evaluation of the same function
//! are timed. The reported ratio `op_ns / primal_ns` is the figure of
//! interest; absolute times depend on the machine.

use std::fmt;
use std::hint::black_box;
use std::io;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compose::{ComposeConfig, Composition};
use crate::diffapi::*;
use crate::error::{Error, Result};
use crate::linalg::DV;
use crate::scalar::D;

/// Benchmarked operations, in default run order.
pub const OPS: [&str; 12] = [
    "diff",
    "diff2",
    "grad",
    "gradv",
    "hessian",
    "hessianv",
    "laplacian",
    "jacobian",
    "jacobianv",
    "jacobianTv",
    "curl",
    "div",
];

/// One row of output. CSV columns are `op,n,m,reps,primal_ns,op_ns,ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub op: String,
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    /// Mean wall time of one plain evaluation, in nanoseconds.
    pub primal_ns: f64,
    /// Mean wall time of one operator invocation, in nanoseconds.
    pub op_ns: f64,
    pub ratio: f64,
    /// Peak bytes allocated during one operator invocation, when measured.
    #[serde(skip)]
    pub peak_bytes: Option<u64>,
}

/// Source of allocation statistics, typically a counting global allocator.
pub trait MemProbe {
    /// Resets the peak to the current allocation level.
    fn reset_peak(&self);
    /// Bytes allocated above the level at the last reset.
    fn peak_since_reset(&self) -> u64;
}

/// Requested problem size: `n`, or `n x m` for vector-valued operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub n: usize,
    pub m: Option<usize>,
}

impl std::str::FromStr for Size {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("size must be N or NxM with N, M >= 1, got {s:?}"));
        let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
        match s.split_once(['x', 'X']) {
            Some((n, m)) => Ok(Size { n: parse(n)?, m: Some(parse(m)?) }),
            None => Ok(Size { n: parse(s)?, m: None }),
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            Some(m) => write!(f, "{}x{m}", self.n),
            None => write!(f, "{}", self.n),
        }
    }
}

/// Checks operation names, returning them in canonical spelling.
pub fn parse_ops(list: &str) -> Result<Vec<&'static str>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            OPS.iter()
                .find(|op| op.eq_ignore_ascii_case(name))
                .copied()
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown operation {name:?}; valid names: {}", OPS.join(", ")))
                })
        })
        .collect()
}

/// Input and output dimensions an operation is run at for a requested size.
pub fn dims(op: &str, size: Size) -> (usize, usize) {
    match op {
        "diff" | "diff2" => (1, 1),
        "grad" | "gradv" | "hessian" | "hessianv" | "laplacian" => (size.n, 1),
        "curl" => (3, 3),
        "div" => (size.n, size.n),
        _ => (size.n, size.m.unwrap_or(size.n)),
    }
}

/// A generated test function with its evaluation point and directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub op: &'static str,
    pub composition: Composition,
    pub x: Vec<f64>,
    /// Tangent direction, length `n`.
    pub v: Vec<f64>,
    /// Cotangent direction, length `m`.
    pub w: Vec<f64>,
}

/// Builds the case for `op` at size `(n, m)`; identical arguments give an
/// identical case.
pub fn generate_case(op: &'static str, n: usize, m: usize, seed: u64) -> Case {
    let index = OPS.iter().position(|o| *o == op).unwrap_or(OPS.len()) as u64;
    let stream = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index << 40)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(m as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    // scalar-output functions get one small tree per input so that the work
    // grows with n; vector-output functions get one tree per output
    let cfg = ComposeConfig {
        max_depth: 3,
        terms: if m == 1 { n.max(1) } else { 1 },
        leaf_prob: 0.2,
        piecewise: true,
    };
    let composition = Composition::random(n, m, &cfg, &mut rng);
    let mut draw = |k: usize| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let x = draw(n);
    let v = draw(n);
    let w = draw(m);
    Case { op, composition, x, v, w }
}

impl Case {
    pub fn n(&self) -> usize {
        self.composition.n
    }

    pub fn m(&self) -> usize {
        self.composition.m()
    }

    fn primal(&self) {
        black_box(self.composition.eval(black_box(&self.x)));
    }

    /// Runs the operator once.
    pub fn run_op(&self) -> Result<()> {
        let c = &self.composition;
        let x = DV::from_slice(&self.x);
        let v = DV::from_slice(&self.v);
        let w = DV::from_slice(&self.w);
        let f = |x: &DV<f64>| Ok(c.eval_d(x));
        let fv = |x: &DV<f64>| Ok(c.eval_dv(x));
        let fs = |t: &D<f64>| c.eval_first(std::slice::from_ref(t));
        let x0 = D::from(self.x[0]);
        match self.op {
            "diff" => drop(black_box(diff(fs, &x0))),
            "diff2" => drop(black_box(diff2(fs, &x0))),
            "grad" => drop(black_box(grad(f, &x)?)),
            "gradv" => drop(black_box(gradv(f, &x, &v)?)),
            "hessian" => drop(black_box(hessian(f, &x)?)),
            "hessianv" => drop(black_box(hessianv(f, &x, &v)?)),
            "laplacian" => drop(black_box(laplacian(f, &x)?)),
            "jacobian" => drop(black_box(jacobian(fv, &x)?)),
            "jacobianv" => drop(black_box(jacobianv(fv, &x, &v)?)),
            "jacobianTv" => drop(black_box(jacobian_tv(fv, &x, &w)?)),
            "curl" => drop(black_box(curl(fv, &x)?)),
            "div" => drop(black_box(div(fv, &x)?)),
            other => return Err(Error::InvalidArgument(format!("unknown operation {other:?}"))),
        }
        Ok(())
    }
}

/// Times every `(op, size)` pair. Sizes that map to the same dimensions for
/// an operation (for example every size for `diff`) are run once.
pub fn run_bench(
    ops: &[&'static str],
    sizes: &[Size],
    reps: usize,
    seed: u64,
    mem: Option<&dyn MemProbe>,
) -> Result<Vec<BenchResult>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("at least one size is required".into()));
    }
    let mut out = Vec::new();
    for &op in ops {
        let mut seen = Vec::new();
        for &size in sizes {
            let (n, m) = dims(op, size);
            if seen.contains(&(n, m)) {
                continue;
            }
            seen.push((n, m));
            out.push(measure(&generate_case(op, n, m, seed), reps, mem)?);
        }
    }
    Ok(out)
}

/// Times one case: a warm-up call of each side, then `reps` timed calls.
pub fn measure(case: &Case, reps: usize, mem: Option<&dyn MemProbe>) -> Result<BenchResult> {
    case.primal();
    case.run_op()?;

    let start = Instant::now();
    for _ in 0..reps {
        case.primal();
    }
    let primal_ns = start.elapsed().as_nanos() as f64 / reps as f64;

    let start = Instant::now();
    for _ in 0..reps {
        case.run_op()?;
    }
    let op_ns = start.elapsed().as_nanos() as f64 / reps as f64;

    let peak_bytes = match mem {
        Some(probe) => {
            probe.reset_peak();
            case.run_op()?;
            Some(probe.peak_since_reset())
        }
        None => None,
    };
    Ok(BenchResult {
        op: case.op.to_string(),
        n: case.n(),
        m: case.m(),
        reps,
        primal_ns,
        op_ns,
        ratio: op_ns / primal_ns.max(1.0),
        peak_bytes,
    })
}

pub fn write_csv<W: io::Write>(out: W, results: &[BenchResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<Rd: io::Read>(input: Rd) -> Result<Vec<BenchResult>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

pub fn write_csv_file(path: &Path, results: &[BenchResult]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, results)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Plain-text table for terminals.
pub fn format_table(results: &[BenchResult]) -> String {
    let show_mem = results.iter().any(|r| r.peak_bytes.is_some());
    let mut s = format!(
        "{:<11} {:>5} {:>5} {:>6} {:>14} {:>14} {:>10}",
        "op", "n", "m", "reps", "primal_ns", "op_ns", "ratio"
    );
    if show_mem {
        s.push_str(&format!(" {:>12}", "peak_bytes"));
    }
    s.push('\n');
    for r in results {
        s.push_str(&format!(
            "{:<11} {:>5} {:>5} {:>6} {:>14.1} {:>14.1} {:>10.2}",
            r.op, r.n, r.m, r.reps, r.primal_ns, r.op_ns, r.ratio
        ));
        if show_mem {
            match r.peak_bytes {
                Some(b) => s.push_str(&format!(" {b:>12}")),
                None => s.push_str(&format!(" {:>12}", "-")),
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_parsing() {
        assert_eq!("10".parse::<Size>().unwrap(), Size { n: 10, m: None });
        assert_eq!("4x2".parse::<Size>().unwrap(), Size { n: 4, m: Some(2) });
        assert!("0".parse::<Size>().is_err());
        assert!("ax3".parse::<Size>().is_err());
    }

    #[test]
    fn unknown_op_lists_valid_names() {
        let e = parse_ops("grad,nope").unwrap_err().to_string();
        assert!(e.contains("nope") && e.contains("jacobianTv"), "{e}");
        assert_eq!(parse_ops("GRAD, div").unwrap(), vec!["grad", "div"]);
    }

    #[test]
    fn cases_are_deterministic() {
        assert_eq!(generate_case("grad", 5, 1, 42), generate_case("grad", 5, 1, 42));
        assert_ne!(generate_case("grad", 5, 1, 42).x, generate_case("grad", 5, 1, 43).x);
    }

    #[test]
    fn single_diff_result() {
        let r = run_bench(&["diff"], &[Size { n: 1, m: None }], 1, 7, None).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].n, r[0].m, r[0].reps), (1, 1, 1));
        assert!(r[0].ratio >= 0.0);
    }

    #[test]
    fn fixed_shape_ops_run_once() {
        let sizes = [Size { n: 2, m: None }, Size { n: 4, m: None }];
        let r = run_bench(&["curl", "div"], &sizes, 1, 1, None).unwrap();
        let shapes: Vec<_> = r.iter().map(|r| (r.op.as_str(), r.n, r.m)).collect();
        assert_eq!(shapes, vec![("curl", 3, 3), ("div", 2, 2), ("div", 4, 4)]);
    }

    #[test]
    fn csv_round_trip() {
        let r = run_bench(&["grad", "jacobianTv"], &[Size { n: 3, m: Some(2) }], 2, 5, None).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("op,n,m,reps,primal_ns,op_ns,ratio\n"), "{text}");
        assert_eq!(read_csv(&buf[..]).unwrap(), r);
    }

    #[test]
    fn every_op_runs() {
        let sizes = [Size { n: 2, m: None }];
        let r = run_bench(&OPS, &sizes, 1, 3, None).unwrap();
        assert_eq!(r.len(), OPS.len());
    }
}

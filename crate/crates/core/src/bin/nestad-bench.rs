//! Measures the runtime overhead of the differentiation operators.

use std::alloc::{GlobalAlloc, Layout, System};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};

use clap::Parser;
use nestad::bench::{self, MemProbe, Size, OPS};
use nestad::linalg::io::write_vector;

/// Allocator wrapper that tracks live and peak bytes.
struct Counting;

static LIVE: AtomicU64 = AtomicU64::new(0);
static PEAK: AtomicU64 = AtomicU64::new(0);
static BASE: AtomicU64 = AtomicU64::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let live = LIVE.fetch_add(layout.size() as u64, Ordering::Relaxed) + layout.size() as u64;
            PEAK.fetch_max(live, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size() as u64, Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

struct Probe;

impl MemProbe for Probe {
    fn reset_peak(&self) {
        let live = LIVE.load(Ordering::Relaxed);
        BASE.store(live, Ordering::Relaxed);
        PEAK.store(live, Ordering::Relaxed);
    }

    fn peak_since_reset(&self) -> u64 {
        PEAK.load(Ordering::Relaxed).saturating_sub(BASE.load(Ordering::Relaxed))
    }
}

#[derive(Parser, Debug)]
#[command(name = "nestad-bench", version, about = "AD runtime overhead per operation")]
struct Args {
    /// Comma-separated operations (default: all)
    #[arg(long, value_name = "LIST")]
    ops: Option<String>,

    /// Comma-separated sizes, each N or NxM
    #[arg(long, value_name = "LIST", default_value = "10,100", value_delimiter = ',')]
    sizes: Vec<String>,

    /// Timed repetitions per measurement
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,

    /// Seed for the generated functions and inputs
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Also write results as CSV to this file
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,

    /// Report peak bytes allocated per operator call
    #[arg(long)]
    mem: bool,

    /// Write each generated input point as a binary array into DIR
    #[arg(long, value_name = "DIR")]
    save_inputs: Option<PathBuf>,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ops = match args.ops.as_deref() {
        Some(list) => match bench::parse_ops(list) {
            Ok(ops) if !ops.is_empty() => ops,
            Ok(_) => return usage_error(format!("--ops is empty; valid names: {}", OPS.join(", "))),
            Err(e) => return usage_error(e),
        },
        None => OPS.to_vec(),
    };
    let sizes: Vec<Size> = match args.sizes.iter().map(|s| s.parse()).collect() {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };

    let probe = Probe;
    let mem: Option<&dyn MemProbe> = args.mem.then_some(&probe as &dyn MemProbe);
    let results = match bench::run_bench(&ops, &sizes, args.reps as usize, args.seed, mem) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", bench::format_table(&results));

    if let Some(path) = &args.csv {
        if let Err(e) = bench::write_csv_file(path, &results) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    if let Some(dir) = &args.save_inputs {
        if let Err(e) = save_inputs(dir, &results, args.seed) {
            eprintln!("error: saving inputs to {}: {e}", dir.display());
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

fn save_inputs(dir: &std::path::Path, results: &[bench::BenchResult], seed: u64) -> nestad::Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in results {
        let op = OPS.iter().find(|o| **o == r.op).expect("result names a known op");
        let case = bench::generate_case(op, r.n, r.m, seed);
        let file = std::fs::File::create(dir.join(format!("{}_{}x{}.bin", r.op, r.n, r.m)))?;
        write_vector(std::io::BufWriter::new(file), &case.x)?;
    }
    Ok(())
}

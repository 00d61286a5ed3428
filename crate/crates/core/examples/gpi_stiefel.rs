//! Minimizes `tr(WᵀBW − 2WᵀC)` over matrices with orthonormal columns. With
//! `C = 0` the optimum is the sum of the `k` smallest eigenvalues of `B`.

use dollda::gpi::{gpi_iterate, GpiProblem};
use dollda::linalg::{polar_factor, stiefel_defect, sym_eigen_ascending};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (n, k) = (12, 3);
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = (&r + r.transpose()) * 0.5;
    let w0 = polar_factor(&DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0)))?;

    let problem = GpiProblem::new(b.clone(), DMatrix::zeros(n, k))?;
    let run = gpi_iterate(&problem, &w0, 0.0, 100_000)?;
    let eig: f64 = sym_eigen_ascending(&b).0.iter().take(k).sum();
    println!("C = 0: objective {:.10}, eigenvalue sum {eig:.10}, {} steps", problem.objective(&run.w), run.trace.len() - 1);

    let c = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
    let problem = GpiProblem::new(b, c)?;
    let run = gpi_iterate(&problem, &w0, 1e-12, 1000)?;
    println!(
        "C ≠ 0: objective {:.6} -> {:.6} in {} steps, ‖WᵀW − I‖ = {:.1e}",
        run.trace[0],
        run.trace.last().unwrap(),
        run.trace.len() - 1,
        stiefel_defect(&run.w)
    );
    Ok(())
}

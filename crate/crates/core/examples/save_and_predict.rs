//! Fits once, saves the model, reloads it and labels fresh target samples.

use dollda::eval::{accuracy, make_synthetic};
use dollda::{fit, FitResult, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = make_synthetic(0, 50, 3, 20, 30.0, 0.6)?;
    let model = fit(&train.dataset, &SolverConfig { k: 8, ..SolverConfig::default() })?;
    println!("transductive accuracy {:.3}", accuracy(&model.target_labels, &train.target_truth)?);

    let dir = std::env::temp_dir().join("dollda_model");
    model.save(&dir)?;
    let loaded = FitResult::load(&dir)?;

    // The rotation plane is drawn before the samples, so the same seed with
    // more samples per class gives fresh draws from the same target domain.
    let fresh = make_synthetic(0, 80, 3, 20, 30.0, 0.6)?;
    let predicted = loaded.predict(&fresh.dataset.target_x())?;
    println!("inductive accuracy on {} new samples {:.3}", predicted.len(), accuracy(&predicted, &fresh.target_truth)?);
    println!("model saved in {}", dir.display());
    Ok(())
}

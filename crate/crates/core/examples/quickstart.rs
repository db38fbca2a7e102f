//! Minimal end-to-end use of the library (mirrors the README example):
//! fit on a matrix, predict, inspect components, serialize.

use anovatv::{fit, Loss, ModelSpec, TuningInput};
use ndarray::Array2;

fn main() -> Result<(), anovatv::Error> {
    // Any numeric matrix works; here, a small synthetic surface.
    let x = Array2::from_shape_fn((60, 3), |(i, j)| ((i * 31 + j * 17) % 97) as f64 / 96.0);
    let y = x.column(0).to_owned() + x.column(1).mapv(|v| (2.0 * v - 1.0).powi(2));

    let model = fit(
        x.view(),
        y.view(),
        None,                  // or Some(&names)
        &ModelSpec::default(), // order 2, pairwise interactions, 11 knots
        Loss::Squared,
        TuningInput::KFold(5),
    )?;

    let predictions = model.predict(x.view())?;
    let components = model.anova_components(x.view())?; // centered, plottable
    let document = model.to_json(); // lossless, versioned
    println!("{} active component(s)", components.len());
    println!(
        "first prediction {}, document {} byte(s)",
        predictions[0],
        document.len()
    );
    Ok(())
}

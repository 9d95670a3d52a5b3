//! Extract pseudo SSL features from a clip, write them as an SSLF file and
//! read them back.
//!
//! cargo run --example ssl_features

use samos::data::synth::{render, Recipe};
use samos::dsp::{fit_length, resample, SSL_RATE_HZ};
use samos::seed::rng_for;
use samos::sslf::{pseudo_extract, read_features_file, write_features_file, DEFAULT_DIM};

fn main() -> samos::Result<()> {
    let recipe = Recipe {
        sample_rate_hz: 48_000,
        snr_db: 10.0,
        lowpass_khz: Some(8.0),
        clipping: true,
    };
    let clip = render(&recipe, 2.0, &mut rng_for(1, "example"));
    let clip16 = fit_length(&resample(&clip, SSL_RATE_HZ)?, 2.0);
    let features = pseudo_extract(&clip16, DEFAULT_DIM, 0)?;

    let dir = std::env::temp_dir().join("samos-example-sslf");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("clip.sslf");
    write_features_file(&features, &path)?;
    let back = read_features_file(&path)?;

    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!(
        "frames {} dim {} layer {} model `{}`",
        back.n_frames, back.dim, back.source_layer, back.source_model_id
    );
    println!("identical after round trip: {}", back == features);
    println!("first frame, first 6 values: {:?}", &back.row(0)[..6]);
    Ok(())
}

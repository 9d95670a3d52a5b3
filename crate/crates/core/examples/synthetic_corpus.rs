//! Generate a small synthetic corpus, show each system's degradation recipe
//! and split it by system.
//!
//! cargo run --example synthetic_corpus [-- OUT_DIR]

use samos::data::synth::system_recipe;
use samos::data::{generate_synthetic, pseudo_mos, split_by_system, SplitSpec, SynthConfig};

fn main() -> samos::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("samos-example-corpus"), Into::into);
    let cfg = SynthConfig {
        n_systems: 8,
        utts_per_system: 5,
        clip_seconds: 1.0,
        ssl_dim: 32,
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic(&cfg, &out)?;
    println!("{} utterances in {}", manifest.len(), out.display());

    println!("system  rate    snr  lowpass  clip  pseudo-MOS");
    for s in 0..cfg.n_systems {
        let r = system_recipe(&cfg, s);
        let lp = r.lowpass_khz.map_or("-".to_string(), |k| format!("{k} kHz"));
        println!(
            "{:6}  {:5}  {:4}  {:>7}  {:4}  {:.2}",
            s,
            r.sample_rate_hz,
            r.snr_db,
            lp,
            r.clipping,
            pseudo_mos(&r)
        );
    }

    let (train, val) = split_by_system(&manifest.entries, &SplitSpec::default())?;
    let systems = |v: &[samos::data::ManifestEntry]| {
        let mut s: Vec<_> = v.iter().filter_map(|e| e.system_id.clone()).collect();
        s.dedup();
        s
    };
    println!("train systems {:?}", systems(&train));
    println!("val systems   {:?}", systems(&val));
    Ok(())
}

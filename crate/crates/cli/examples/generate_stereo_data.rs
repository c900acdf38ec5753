//! Regenerates the bundled synthetic stereo pair under `crates/cli/data/`.
//! The unit test `bundled_pair_matches_generator` keeps the files honest.

use potts_cli::formats::write_pgm_p5;
use potts_cli::stereo::synthetic_pair;

fn main() {
    let (left, right) = synthetic_pair(64, 48, 2, 42);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    std::fs::write(format!("{dir}/stereo_left.pgm"), write_pgm_p5(&left)).unwrap();
    std::fs::write(format!("{dir}/stereo_right.pgm"), write_pgm_p5(&right)).unwrap();
    println!("wrote {dir}/stereo_left.pgm and stereo_right.pgm");
}

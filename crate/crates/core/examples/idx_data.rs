//! Writes a tiny IDX pair, reads it back, and builds the two-class and
//! synthetic datasets the experiments use.

use sgmem::data::{binary_subset, load_idx, synth_dataset, write_idx, RawImageSet, SynthKind};

fn main() -> sgmem::Result<()> {
    let dir = std::env::temp_dir().join("sgmem-idx-example");
    std::fs::create_dir_all(&dir).map_err(|source| sgmem::Error::Io { path: dir.clone(), source })?;
    let raw = RawImageSet { rows: 2, cols: 2, pixels: vec![0, 255, 10, 20, 5, 5, 5, 5, 1, 2, 3, 4], labels: vec![2, 9, 2] };
    let (images, labels) = (dir.join("images-idx3-ubyte"), dir.join("labels-idx1-ubyte"));
    write_idx(&raw, &images, &labels)?;
    let back = load_idx(&images, &labels)?;
    println!("read {} images of {}x{}, labels {:?}", back.len(), back.rows, back.cols, back.labels);
    let pair = binary_subset(&back, 2, 9, true)?;
    println!("two-class subset: {} rows, max feature norm {:.3}", pair.len(), pair.max_feature_norm());
    let blobs = synth_dataset(SynthKind::SeparableLogistic { margin: 2.0, noise: 0.1 }, 5, 3, 0)?;
    for e in blobs.examples() {
        println!("  {:?} -> {:?}", e.features.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>(), e.class());
    }
    Ok(())
}

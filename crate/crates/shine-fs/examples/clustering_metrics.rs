//! The evaluation primitives on their own: k-means with greedy seeding,
//! optimal-assignment accuracy, and normalized mutual information.
//!
//! ```sh
//! cargo run --example clustering_metrics
//! ```

use nalgebra::DMatrix;
use shine_fs::eval::{accuracy, kmeans, nmi};

fn main() -> shine_fs::Result<()> {
    // three 1-D blobs
    let points = [
        0.0, 0.4, 0.8, 1.2, // cluster 0
        10.0, 10.3, 10.9, // cluster 1
        25.0, 25.5, 26.0, 24.5, // cluster 2
    ];
    let truth = vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2];
    let m = DMatrix::from_row_slice(1, points.len(), &points);

    let run = kmeans(&m, 3, 7, 100)?;
    println!("k-means labels : {:?}", run.labels);
    println!("inertia        : {:.3} after {} iterations", run.inertia, run.iterations);

    println!("accuracy       : {:.3}", accuracy(&truth, &run.labels)?);
    println!("nmi            : {:.3}", nmi(&truth, &run.labels)?);

    // the metrics ignore label naming entirely
    let relabeled: Vec<usize> = run.labels.iter().map(|&l| [7, 3, 5][l]).collect();
    println!(
        "relabeled pred : acc {:.3}, nmi {:.3} (unchanged)",
        accuracy(&truth, &relabeled)?,
        nmi(&truth, &relabeled)?
    );
    Ok(())
}

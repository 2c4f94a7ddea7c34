//! Agglomerates a Cartesian grid into polygons and writes the result in the
//! plain-text mesh format.
//!
//!     cargo run --example mesh_agglomeration -- 16 40 out.mesh

use psdg::mesh::{agglomerate, build_cartesian_mesh, write_mesh, FaceKind, Rect};

fn main() -> psdg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(16);
    let target: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);

    let fine = build_cartesian_mesh(n, n, Rect::unit())?;
    let agg = agglomerate(&fine, target, 1)?;
    let mesh = agg.mesh.classify_boundary(|x| (x[0] - 1.0).abs() < 1e-12);

    let sides: Vec<usize> = (0..mesh.num_elements()).map(|e| mesh.elements()[e].len()).collect();
    println!("{} squares -> {} polygons (target reached: {})", fine.num_elements(), mesh.num_elements(), agg.reached_target);
    println!("vertices per polygon: min {} max {}", sides.iter().min().unwrap(), sides.iter().max().unwrap());
    println!("mesh size h = {:.4}, total area = {:.12}", mesh.mesh_size(), mesh.total_area());
    for kind in [FaceKind::Interior, FaceKind::Dirichlet, FaceKind::Neumann] {
        println!("{kind:?} faces: {}", mesh.count_faces(kind));
    }
    if let Some(path) = args.get(2) {
        std::fs::write(path, write_mesh(&mesh))?;
        println!("written to {path}");
    }
    Ok(())
}

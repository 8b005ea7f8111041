use gdforge_core::classifier::*;
use gdforge_core::scalar::Scalar;
use std::io::Write;

fn p(s: String) { println!("{s}"); std::io::stdout().flush().unwrap(); }

fn main() {
    for (n, k) in [(4i64, 2i64), (5, 2)] {
        let w = Window::new(n, 0, k).unwrap();
        let t0 = std::time::Instant::now();
        let cs = build_system(ClassCase::NovikovOverLie, &Scalar::zero(), 1, &w).unwrap();
        let proj = solve_and_project(&cs);
        let fam = family_generators(ClassCase::NovikovOverLie, &Scalar::zero(), 1, &w).unwrap();
        let m = match_family(&proj, &fam, &cs);
        p(format!(
            "star N={n} K={k}: vars={} rows={} rank={} dim={} interior_dim={} verdict={:?} recovered={:?} [{:?}]",
            cs.system.var_count(), cs.system.row_count(), proj.solution.rank,
            proj.solution.dimension(), proj.interior_dim, m.verdict, m.recovered, t0.elapsed()
        ));
    }
    // Levels case phases
    let w = Window::new(3, 3, 1).unwrap();
    let b = Scalar::ratio(1, 2);
    let t0 = std::time::Instant::now();
    let cs = build_system(ClassCase::LevelsBOutside, &b, 1, &w).unwrap();
    p(format!("levels build: vars={} rows={} [{:?}]", cs.system.var_count(), cs.system.row_count(), t0.elapsed()));
    let t1 = std::time::Instant::now();
    let r = cs.system.rank();
    p(format!("levels forward rank={} [{:?}]", r, t1.elapsed()));
    let t2 = std::time::Instant::now();
    let proj = solve_and_project(&cs);
    p(format!("levels full solve: dim={} interior_dim={} [{:?}]", proj.solution.dimension(), proj.interior_dim, t2.elapsed()));
    let fam = family_generators(ClassCase::LevelsBOutside, &b, 1, &w).unwrap();
    let t3 = std::time::Instant::now();
    let m = match_family(&proj, &fam, &cs);
    p(format!("levels verdict={:?} family_dim={} [{:?}]", m.verdict, m.family_dim, t3.elapsed()));
}

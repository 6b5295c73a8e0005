use super::*;
use crate::oracle::truncated_green;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

const EXC: PhiVariant = PhiVariant::Excursion;

fn geometric_ks(lo: f64, hi: f64, n: usize) -> Vec<i64> {
    let mut ks: Vec<i64> = (0..n)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).round() as i64)
        .collect();
    ks.dedup();
    ks
}

#[test]
fn sequence_constructors() {
    let s = DirectionalSequence::parabolic(-1.5, &[2, 3, 10]).unwrap();
    assert_eq!(s.targets, vec![Vertex::new(-6, 2), Vertex::new(-14, 3), Vertex::new(-150, 10)]);
    for (&k, y) in s.ks.iter().zip(&s.targets) {
        assert!((y.x1 as f64 / (k * k) as f64 + 1.5).abs() <= 0.5 / (k * k) as f64 + 1e-12);
    }
    let h = DirectionalSequence::horizontal(false, 2, &[4, 8]).unwrap();
    assert_eq!(h.targets, vec![Vertex::new(-4, 2), Vertex::new(-8, 2)]);
    assert_eq!(h.direction, Direction::MinusInfinity);
    let c = DirectionalSequence::cubic(true, &[2, 3]).unwrap();
    assert_eq!(c.targets, vec![Vertex::new(8, 2), Vertex::new(27, 3)]);
    assert!(DirectionalSequence::horizontal(true, 1, &[8, 4]).is_err());
    assert!(DirectionalSequence::parabolic(0.0, &[0, 1]).is_err());
    assert!(DirectionalSequence::cubic(true, &[3_000_000]).is_err());
}

#[test]
fn synthetic_power_law_fit() {
    let ks: Vec<i64> = (1..=10).map(|i| 10 * i).collect();
    let seq = DirectionalSequence::parabolic(0.5, &ks).unwrap();
    let vals: Vec<f64> = ks.iter().map(|&k| 2.5 / k as f64).collect();
    let f = fit_asymptotics(&seq, &vals, 0).unwrap();
    assert!((f.exponent + 1.0).abs() < 1e-6);
    assert!((f.constant - 2.5).abs() < 1e-6);
    assert_eq!(f.window, (10, 100));
    assert!(matches!(fit_asymptotics(&seq, &vals[..7], 0), Err(Error::InvalidArgument(_))));
    let short = window(&seq, 0, 6);
    assert!(matches!(fit_asymptotics(&short, &vals[..7], 0), Err(Error::DegenerateFit(_))));
    // horizontal regressor is |y₁ - z₁|
    let h = DirectionalSequence::horizontal(true, 1, &ks).unwrap();
    let vals: Vec<f64> = ks.iter().map(|&k| 0.7 / ((k + 3) as f64).sqrt()).collect();
    let f = fit_asymptotics(&h, &vals, -3).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-9);
    assert!((plateau_constant(&h, &vals, -3, -0.5) - 0.7).abs() < 1e-12);
}

#[test]
fn induced_martin_kernel() {
    for v in [-50i64, 0, 7, 4096] {
        assert_eq!(martin_kernel_induced(0, v, EXC, &q()).unwrap().value, 1.0);
    }
    for u in [-5i64, -1, 1, 5] {
        for v in [4096i64, -4096] {
            let k = martin_kernel_induced(u, v, EXC, &q()).unwrap();
            assert!(k.value > 0.0);
            assert!((k.value - 1.0).abs() < 0.05);
        }
        for v in -20..=20 {
            assert!(martin_kernel_induced(u, v, EXC, &q()).unwrap().value > 0.0);
        }
    }
}

#[test]
fn green_general_on_axis_is_green_from_axis() {
    let k = Kernel::sign_rule();
    for y in [Vertex::new(3, 0), Vertex::new(-2, 5)] {
        let x = Vertex::new(1, 0);
        let a = green_general(&k, x, y, GreenMethod::Oracle { horizon: 10 }, EXC, &q()).unwrap();
        let b = green_from_axis(x, y, EXC, &q()).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.error, b.error);
    }
}

#[test]
fn oracle_decomposition_brackets_closed_form() {
    let k = Kernel::sign_rule();
    let ing = HitIngredients::new(&k, 1, 2048).unwrap();
    for y in [Vertex::new(0, 0), Vertex::new(2, 0), Vertex::new(-1, 0), Vertex::new(3, 2), Vertex::new(1, -1)] {
        for x1 in [-2i64, 0, 3] {
            let lower = ing.green(&k, x1, y, EXC, &q()).unwrap();
            let exact = green_closed_form(Vertex::new(x1, 1), y, EXC, &q()).unwrap();
            let gap = exact.value - lower.value;
            assert!(gap >= -(exact.error + 1e-9), "{x1} {y}: {gap}");
            assert!(gap <= lower.error + exact.error, "{x1} {y}: {gap} > {}", lower.error);
        }
    }
}

#[test]
fn oracle_green_is_centrally_symmetric() {
    let k = Kernel::sign_rule();
    let m = GreenMethod::Oracle { horizon: 1024 };
    for (a, b) in [(0i64, 0i64), (2, 1), (-3, 2), (1, -1)] {
        let g = green_general(&k, Vertex::new(0, 1), Vertex::new(a, b), m, EXC, &q()).unwrap();
        let h = green_general(&k, Vertex::new(0, -1), Vertex::new(-a, -b), m, EXC, &q()).unwrap();
        assert!((g.value - h.value).abs() <= 2.0 * g.error.max(h.error));
        assert!((g.value - h.value).abs() < 1e-9);
    }
}

#[test]
fn oracle_green_dominates_truncated_walk() {
    let k = Kernel::sign_rule();
    let x = Vertex::new(0, 1);
    let g = green_general(&k, x, Vertex::new(1, 0), GreenMethod::Oracle { horizon: 1024 }, EXC, &q()).unwrap();
    let t = truncated_green::<f64>(&k, x, Vertex::new(1, 0), 1024).unwrap();
    assert!(t <= g.value + g.error);
}

#[test]
fn martin_kernel_basics() {
    let k = Kernel::sign_rule();
    for y in [Vertex::new(5, 0), Vertex::new(-3, 7)] {
        let m = martin_kernel(&k, Vertex::ORIGIN, y, GreenMethod::ClosedForm, EXC, &q()).unwrap();
        assert_eq!(m.value, 1.0);
        for x in box_starts(-2, 2) {
            let m = martin_kernel(&k, x, y, GreenMethod::ClosedForm, EXC, &q()).unwrap();
            assert!(m.value > 0.0 && m.error >= 0.0);
        }
    }
    assert!(matches!(
        martin_kernel(&k, Vertex::new(0, 1), Vertex::new(5, 0), GreenMethod::ClosedForm, PhiVariant::Paper, &q()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn decomposition_identity_small_scale() {
    let k = Kernel::sign_rule();
    let ing = HitIngredients::new(&k, 2, 1024).unwrap();
    for y in [Vertex::new(0, 0), Vertex::new(4, 0), Vertex::new(-1, 1)] {
        for x1 in [-1i64, 2] {
            let lhs = martin_kernel(&k, Vertex::new(x1, 2), y, GreenMethod::ClosedForm, EXC, &q()).unwrap();
            let rhs = decomposition_rhs(&k, &ing, x1, y, EXC, &q()).unwrap();
            let gap = lhs.value - rhs.value;
            assert!(gap >= -(lhs.error + 1e-9) && gap <= rhs.error + lhs.error, "{x1} {y}: {gap}");
        }
    }
}

#[test]
fn local_time_examples() {
    let k = Kernel::sign_rule();
    let ys: Vec<Vertex> = (8..=64).step_by(8).map(|k| Vertex::new(k, 1)).collect();
    let (pts, verdict) = local_time_decay(&k, &ys, 2048, true).unwrap();
    assert_eq!(pts.len(), 8);
    assert_ne!(verdict, DecayVerdict::NotDecreasing);
    for w in pts.windows(2) {
        assert!(w[1].scaled < w[0].scaled);
    }
    let (p, _) = local_time_decay(&k, &[Vertex::ORIGIN, Vertex::new(-1, 1), Vertex::new(1, -1)], 256, false).unwrap();
    assert!(p[0].value >= 1.0);
    assert_eq!(p[1].value, 0.0);
    // only pruned float mass can still count as reachable
    assert!(p[1].bound < 1e-12);
    assert_eq!(p[2].value, 0.0);
}

#[test]
fn directional_exponents() {
    let seq = DirectionalSequence::parabolic(0.0, &geometric_ks(32.0, 256.0, 12)).unwrap();
    let g: Vec<f64> = directional_green(&seq, 0, EXC, &q()).unwrap().iter().map(|v| v.value).collect();
    let f = fit_asymptotics(&seq, &g, 0).unwrap();
    assert!((f.exponent + 1.0).abs() < 0.05);
    assert!(f.constant > 0.0);

    let vs = geometric_ks(64.0, 4096.0, 13);
    let axis = DirectionalSequence::horizontal(true, 0, &vs).unwrap();
    let g: Vec<f64> = vs.iter().map(|&v| green_induced(v, EXC, &q()).unwrap().value).collect();
    let f = fit_asymptotics(&axis, &g, 0).unwrap();
    assert!((f.exponent + 0.5).abs() < 0.05);
    // doubling the window barely moves the exponent
    let half = window(&axis, 0, 8);
    let f_half = fit_asymptotics(&half, &g[..9], 0).unwrap();
    assert!((f.exponent - f_half.exponent).abs() < 0.02);
}

#[test]
fn boundary_scan_rows() {
    let k = Kernel::sign_rule();
    let seq = DirectionalSequence::parabolic(1.0, &[16, 32, 64]).unwrap();
    let xs = box_starts(-1, 1);
    let rows = boundary_scan(&k, &xs, &seq, GreenMethod::ClosedForm, EXC, &q()).unwrap();
    assert_eq!(rows.len(), 27);
    let worst = |kk: i64| {
        rows.iter()
            .filter(|r| r.k == kk)
            .map(|r| (r.kernel.value - 1.0).abs())
            .fold(0.0, f64::max)
    };
    assert!(worst(64) < worst(32) && worst(32) < worst(16));
    for r in rows.iter().filter(|r| r.x == Vertex::ORIGIN) {
        assert_eq!(r.kernel.value, 1.0);
    }
    let oracle = boundary_scan(&k, &xs, &seq, GreenMethod::Oracle { horizon: 512 }, EXC, &q()).unwrap();
    for (a, b) in rows.iter().zip(&oracle) {
        assert!(b.kernel.value <= a.kernel.value + a.kernel.error + 1e-9);
        assert!(a.kernel.value - b.kernel.value <= b.kernel.error + a.kernel.error);
    }
}

//! End-to-end factorization behavior on the shipped model problems.

use skelfac::factor::{
    rsrs_factor, skeletonize_box, srs_proxy_factor, ProxyConfig, RsrsOptions, ToleranceSchedule,
};
use skelfac::linalg::spectral_norm_estimate;
use skelfac::mat::Mat;
use skelfac::oracle::{DenseOracle, KernelOracle, LinearOracle};
use skelfac::rng::gaussian;
use skelfac::sketch::SketchSet;
use skelfac::tree::{BoxTree, PointSet};

fn equispaced_1d(n: usize) -> PointSet {
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    PointSet::from_1d(&xs).unwrap()
}

fn errsolve_estimate(o: &dyn LinearOracle, f: &skelfac::factor::SkelFactorization) -> f64 {
    let n = o.dim();
    spectral_norm_estimate(
        &mut |x| {
            let ax = o.apply(x);
            x.sub(&f.solve(&ax))
        },
        &mut |x| {
            let atx = o.apply_adjoint(&f.solve_adjoint(x));
            x.sub(&atx)
        },
        n,
        12,
        917,
    )
}

#[test]
fn diagonal_operator_factors_to_rank_zero_blocks() {
    let n = 512;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 32).unwrap();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = 1.0 + (i as f64) / n as f64;
    }
    let o = DenseOracle::new(d.clone());
    let sched = ToleranceSchedule::new(1e-10, 2.0, 40);
    let p = 3 * 32 + 50;
    let f = rsrs_factor(&o, &mut tree, p, &sched, 5, &RsrsOptions::default()).unwrap();

    // Every box compresses to rank zero, so all indices are eliminated.
    assert!(f.skel.is_empty());
    for step in &f.steps {
        assert_eq!(step.rank(), 0);
        assert!(step.interp_rows.is_none() && step.elim_rows.is_none());
    }
    assert!(f.validate_index_partition());
    // Memory is exactly the pivot LU blocks.
    let expect: usize = f.steps.iter().map(|s| s.idx_resid.len().pow(2)).sum();
    assert_eq!(f.memory_scalars(), expect);
    // Solve is exact to near machine precision.
    let x = gaussian(n, 3, 7, 0);
    let b = o.apply(&x);
    let err = f.solve(&b).sub(&x).fro_norm() / x.fro_norm();
    assert!(err <= 1e-13, "diagonal solve error {err}");
    // Apply reproduces the diagonal operator.
    let ka = f.apply(&x);
    assert!(ka.sub(&b).fro_norm() <= 1e-13 * b.fro_norm());
}

#[test]
fn log_kernel_1d_direct_solver_accuracy() {
    let n = 512;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 32).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-10, 2.0, 50);
    let p = 3 * 32 + 60;
    let f = rsrs_factor(&o, &mut tree, p, &sched, 11, &RsrsOptions::default()).unwrap();
    assert!(f.validate_index_partition());

    let errsolve = errsolve_estimate(&o, &f);
    assert!(errsolve <= 1e-6, "errsolve {errsolve}");

    // Factorization matches the dense operator in spectral norm.
    let k_dense = f.apply(&Mat::identity(n));
    let diff = k_dense.sub(o.matrix());
    let relerr = skelfac::linalg::spectral_norm_dense(&diff, 20, 99)
        / skelfac::linalg::spectral_norm_dense(o.matrix(), 20, 99);
    assert!(relerr <= 10.0 * 1e-10, "relerr {relerr}");
}

#[test]
fn solve_and_apply_round_trip() {
    let n = 256;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 32).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-8, 2.0, 40);
    let f = rsrs_factor(&o, &mut tree, 3 * 32 + 50, &sched, 3, &RsrsOptions::default()).unwrap();
    let x = gaussian(n, 4, 8, 0);
    let back = f.solve(&f.apply(&x));
    assert!(back.sub(&x).fro_norm() <= 1e-11 * x.fro_norm());
    // adjoint pair round trip
    let back_a = f.solve_adjoint(&f.apply_adjoint(&x));
    assert!(back_a.sub(&x).fro_norm() <= 1e-11 * x.fro_norm());
}

#[test]
fn fixed_seed_is_bit_identical() {
    let n = 256;
    let run = || {
        let pts = equispaced_1d(n);
        let mut tree = BoxTree::build(&pts, 32).unwrap();
        let o = KernelOracle::log2d(pts, 0.0).unwrap();
        let sched = ToleranceSchedule::new(1e-8, 2.0, 40);
        let f =
            rsrs_factor(&o, &mut tree, 3 * 32 + 50, &sched, 42, &RsrsOptions::default()).unwrap();
        skelfac::factor::container::to_bytes(&f)
    };
    assert_eq!(run(), run());
}

#[test]
fn container_round_trip_preserves_behavior() {
    let n = 256;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 32).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-8, 2.0, 40);
    let f = rsrs_factor(&o, &mut tree, 3 * 32 + 50, &sched, 9, &RsrsOptions::default()).unwrap();
    let bytes = skelfac::factor::container::to_bytes(&f);
    let back = skelfac::factor::container::from_bytes(&bytes).unwrap();
    assert_eq!(skelfac::factor::container::to_bytes(&back), bytes);
    let x = gaussian(n, 2, 10, 0);
    assert_eq!(f.solve(&x), back.solve(&x));
}

#[test]
fn single_step_decouples_residuals_in_dense_mirror() {
    // After one box step, the explicitly eliminated operator has resid
    // rows/columns vanishing outside the pivot block.
    let n = 512;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 64).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let atol = 1e-8;
    let p = 3 * 64 + 48;
    let mut s = SketchSet::build(&o, p, 13).unwrap();
    let leaf = tree.level_order(tree.depth())[0];
    let (step, _) = skeletonize_box(&mut s, &mut tree, leaf, atol, 40, 8).unwrap();
    let mut a_g = o.matrix().clone();
    step.eliminate_dense(&mut a_g);
    let resid = &step.idx_resid;
    assert!(!resid.is_empty());
    let others: Vec<usize> = (0..n).filter(|i| !resid.contains(i)).collect();
    let row_leak = a_g.submatrix(resid, &others).fro_norm();
    let col_leak = a_g.submatrix(&others, resid).fro_norm();
    assert!(row_leak <= 1e-6, "row leak {row_leak}");
    assert!(col_leak <= 1e-6, "col leak {col_leak}");
}

#[test]
fn proxy_and_blackbox_agree_on_log_kernel() {
    let n = 512;
    let pts = equispaced_1d(n);
    let o = KernelOracle::log2d(pts.clone(), 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-8, 2.0, 48);

    let mut tree_a = BoxTree::build(&pts, 32).unwrap();
    let fa = rsrs_factor(&o, &mut tree_a, 3 * 32 + 58, &sched, 21, &RsrsOptions::default())
        .unwrap();
    let mut tree_b = BoxTree::build(&pts, 32).unwrap();
    let fb = srs_proxy_factor(&o, &mut tree_b, &sched, &ProxyConfig::default()).unwrap();

    let ea = errsolve_estimate(&o, &fa);
    let eb = errsolve_estimate(&o, &fb);
    assert!(ea <= 1e-5, "rsrs errsolve {ea}");
    assert!(eb <= 1e-5, "proxy errsolve {eb}");

    // Per-box skeleton ranks within a factor of two of each other.
    let ra = fa.rank_table();
    let rb = fb.rank_table();
    assert_eq!(ra.len(), rb.len());
    for ((la, ba, ka), (lb, bb, kb)) in ra.iter().zip(rb.iter()) {
        assert_eq!((la, ba), (lb, bb));
        let (lo, hi) = (*ka.min(kb), *ka.max(kb));
        assert!(
            hi <= 2 * lo.max(1),
            "box {ba} level {la}: ranks {ka} vs {kb}"
        );
    }
}

#[test]
fn proxy_requires_capabilities() {
    let n = 64;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 16).unwrap();
    let o = DenseOracle::new(gaussian(n, n, 30, 0));
    let sched = ToleranceSchedule::new(1e-6, 2.0, 16);
    let r = srs_proxy_factor(&o, &mut tree, &sched, &ProxyConfig::default());
    assert!(matches!(r, Err(skelfac::Error::UnsupportedOracle { .. })));
}

#[test]
fn proxy_box_with_empty_far_field_eliminates_against_near_only() {
    // Depth-2 tree in 1d: level-2 boxes have near and far; level-1 would
    // not. With stop level 2 the run exercises empty-ring2 boxes (4 and 7).
    let n = 64;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 16).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-8, 2.0, 16);
    let f = srs_proxy_factor(&o, &mut tree, &sched, &ProxyConfig::default()).unwrap();
    assert!(f.validate_index_partition());
    let errsolve = errsolve_estimate(&o, &f);
    assert!(errsolve <= 1e-5, "errsolve {errsolve}");
}

#[test]
fn coupling_estimates_shrink_as_tolerance_tightens() {
    let n = 512;
    let pts = equispaced_1d(n);
    let o = KernelOracle::log2d(pts.clone(), 0.0).unwrap();
    let mut maxima = Vec::new();
    for atol in [1e-4f64, 1e-7, 1e-10] {
        let mut tree = BoxTree::build(&pts, 32).unwrap();
        let sched = ToleranceSchedule::new(atol, 2.0, 50);
        let f =
            rsrs_factor(&o, &mut tree, 3 * 32 + 60, &sched, 31, &RsrsOptions::default()).unwrap();
        let worst = f
            .diagnostics
            .levels
            .iter()
            .map(|l| l.coupling_fwd_max.max(l.coupling_adj_max))
            .fold(0.0f64, f64::max);
        maxima.push(worst);
    }
    assert!(
        maxima[0] > maxima[1] && maxima[1] > maxima[2],
        "coupling maxima not decreasing: {maxima:?}"
    );
}

#[test]
fn proxy_stack_rank_tracks_explicit_far_field_id() {
    // Interior leaf box at N = 256: the proxy-compressed ID reaches the same
    // rank as the ID of the explicitly assembled far-field block, within 2.
    use skelfac::linalg::row_id;
    let n = 256;
    let pts = equispaced_1d(n);
    let tree = BoxTree::build(&pts, 32).unwrap();
    let o = KernelOracle::log2d(pts.clone(), 0.0).unwrap();
    let atol = 1e-8;
    let proxy = ProxyConfig::default();
    let leaf_level = tree.depth();
    let boxes = tree.level_order(leaf_level);
    let b = boxes[boxes.len() / 2]; // interior box
    let rows_b = tree.active(b).to_vec();
    let mut nf = rows_b.clone();
    nf.extend(tree.near_active(b));
    let far: Vec<usize> = (0..n).filter(|i| !nf.contains(i)).collect();
    let explicit = o.matrix().submatrix(&rows_b, &far);
    let id_explicit = row_id(&explicit, atol, 40);

    // Stacked proxy target: ring-2 blocks plus the proxy circle.
    let mut ring2 = Vec::new();
    for rb in tree.second_ring(b) {
        ring2.extend_from_slice(tree.active(rb));
    }
    let tb = tree.box_ref(b);
    let radius = proxy.radius_factor * tb.half;
    let mut pb = Mat::zeros(rows_b.len(), proxy.n_proxy);
    for q in 0..proxy.n_proxy {
        let th = 2.0 * std::f64::consts::PI * q as f64 / proxy.n_proxy as f64;
        let x = [tb.center[0] + radius * th.cos(), radius * th.sin()];
        for (r, &i) in rows_b.iter().enumerate() {
            pb[(r, q)] = o.eval_kernel(&x, i).unwrap();
        }
    }
    let stack = o.matrix().submatrix(&rows_b, &ring2).hcat(&pb);
    let id_proxy = row_id(&stack, atol, 40);
    // The circle imputes a mildly higher rank than the quasi-1d far field
    // actually has (measured: 12 vs 8 at atol 1e-8); it must stay within the
    // factor-two agreement the multilevel runs rely on, and never fall below
    // the explicit rank.
    assert!(id_proxy.rank >= id_explicit.rank);
    assert!(
        id_proxy.rank <= 2 * id_explicit.rank,
        "proxy rank {} vs explicit rank {}",
        id_proxy.rank,
        id_explicit.rank
    );
}

#[test]
fn replayed_step_reproduces_driver_sketch_updates() {
    let n = 256;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 32).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let p = 3 * 32 + 50;
    let mut live = SketchSet::build(&o, p, 71).unwrap();
    let leaf = tree.level_order(tree.depth())[2];
    let (step, _) = skeletonize_box(&mut live, &mut tree, leaf, 1e-8, 40, 10).unwrap();

    let mut replay = SketchSet::build(&o, p, 71).unwrap();
    skelfac::factor::update_sketches_elim(&mut replay, &step).unwrap();
    assert_eq!(live.omega, replay.omega);
    assert_eq!(live.psi, replay.psi);
    assert_eq!(live.y, replay.y);
    assert_eq!(live.z, replay.z);
    assert_eq!(live.generation, replay.generation);
}

#[test]
fn adjoint_paths_match_dense_transpose() {
    // apply_adjoint and solve_adjoint must agree with the transpose of the
    // densely assembled factorization, not merely invert each other.
    let n = 192;
    let pts = equispaced_1d(n);
    let mut tree = BoxTree::build(&pts, 24).unwrap();
    let o = KernelOracle::log2d(pts, 0.0).unwrap();
    let sched = ToleranceSchedule::new(1e-7, 2.0, 24);
    let f = rsrs_factor(&o, &mut tree, 3 * 24 + 34, &sched, 13, &RsrsOptions::default()).unwrap();
    let k_dense = f.apply(&Mat::identity(n));
    let x = gaussian(n, 3, 14, 0);

    let adj = f.apply_adjoint(&x);
    let adj_ref = k_dense.t_mul(&x);
    assert!(
        adj.sub(&adj_ref).fro_norm() <= 1e-12 * adj_ref.fro_norm(),
        "apply_adjoint deviates from dense transpose"
    );

    let lu = skelfac::linalg::LuFactors::factor(&k_dense).unwrap();
    let sol = f.solve_adjoint(&x);
    let sol_ref = lu.solve(&x, true);
    assert!(
        sol.sub(&sol_ref).fro_norm() <= 1e-9 * sol_ref.fro_norm(),
        "solve_adjoint deviates from dense transposed solve"
    );
}

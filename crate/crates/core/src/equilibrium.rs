//! Exact saddle points and logit equilibria of the expected game.
//!
//! Saddle points are found by enumerating square support pairs `(I, J)` and
//! solving the two indifference systems
//!
//! ```text
//! Σ_{i∈I} f_i M[i][j] = v  (j ∈ J),   Σ f_i = 1
//! Σ_{j∈J} M[i][j] g_j = w  (i ∈ I),   Σ g_j = 1
//! ```
//!
//! Every finite matrix game has an extreme optimal pair supported on a
//! nonsingular square submatrix, so the enumeration always terminates with a
//! verified solution. Pairs are visited by support size, then
//! lexicographically, which fixes the tie-break for degenerate games.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, MixedStrategy, Player};
use crate::learners::softmax;

/// Largest action count per player accepted by [`solve_saddle`].
pub const MAX_SUPPORT_ENUMERATION: usize = 12;

const SADDLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub f_star: MixedStrategy,
    pub g_star: MixedStrategy,
    /// Expected payoff to player 1, including the mean noise shift.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitEquilibrium {
    pub f_eps: MixedStrategy,
    pub g_eps: MixedStrategy,
    pub epsilon: f64,
    /// `max(|f - β1(g)|∞, |g - β2(f)|∞)` at the returned point.
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tiny`.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tiny: f64) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < tiny {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Lexicographic k-subsets of `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Indifference weights over `support` that equalize the entries selected by
/// `against`, where `entry(s, o)` is the payoff for own action `s` versus
/// opponent action `o`. Returns the full-length strategy and common value.
fn indifference(
    n: usize,
    support: &[usize],
    against: &[usize],
    entry: impl Fn(usize, usize) -> f64,
    tiny: f64,
) -> Option<(Vec<f64>, f64)> {
    let k = support.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    let mut b = vec![0.0; k + 1];
    for (r, &o) in against.iter().enumerate() {
        for (c, &s) in support.iter().enumerate() {
            a[r][c] = entry(s, o);
        }
        a[r][k] = -1.0;
    }
    for c in 0..k {
        a[k][c] = 1.0;
    }
    b[k] = 1.0;
    let x = solve_linear(a, b, tiny)?;
    if x[..k].iter().any(|&p| p < -SADDLE_TOL) {
        return None;
    }
    let mut probs = vec![0.0; n];
    for (c, &s) in support.iter().enumerate() {
        probs[s] = x[c].max(0.0);
    }
    let z: f64 = probs.iter().sum();
    if !(z > 0.0) {
        return None;
    }
    probs.iter_mut().for_each(|p| *p /= z);
    Some((probs, x[k]))
}

fn verify(spec: &GameSpec, f: &MixedStrategy, g: &MixedStrategy, tol: f64) -> Option<f64> {
    let v = spec.expected_value(f, g).ok()?;
    let shift = spec.noise.mean();
    let best_row = spec.matrix.times_col(g.probs()).into_iter().fold(f64::NEG_INFINITY, f64::max) + shift;
    let best_col = spec.matrix.row_times(f.probs()).into_iter().fold(f64::INFINITY, f64::min) + shift;
    (best_row <= v + tol && best_col >= v - tol).then_some(v)
}

fn enumerate(spec: &GameSpec, first_only: bool) -> Result<Vec<SaddleSolution>> {
    let m = spec.matrix.rows();
    let n = spec.matrix.cols();
    if m > MAX_SUPPORT_ENUMERATION || n > MAX_SUPPORT_ENUMERATION {
        return Err(Error::domain(format!(
            "support enumeration is capped at {MAX_SUPPORT_ENUMERATION} actions per player, game is {m}x{n}"
        )));
    }
    let scale = spec.matrix.min().abs().max(spec.matrix.max().abs()).max(1.0);
    let tol = SADDLE_TOL * scale;
    let tiny = 1e-12 * scale;
    let mut found: Vec<SaddleSolution> = Vec::new();
    for k in 1..=m.min(n) {
        let rows = subsets(m, k);
        let cols = subsets(n, k);
        for i in &rows {
            for j in &cols {
                let Some((f, _)) = indifference(m, i, j, |s, o| spec.matrix.get(s, o), tiny) else {
                    continue;
                };
                let Some((g, _)) = indifference(n, j, i, |s, o| spec.matrix.get(o, s), tiny) else {
                    continue;
                };
                let (f, g) = (MixedStrategy::from_raw(f), MixedStrategy::from_raw(g));
                if let Some(value) = verify(spec, &f, &g, tol) {
                    let dup =
                        found.iter().any(|s| s.f_star.distance(&f) < SADDLE_TOL && s.g_star.distance(&g) < SADDLE_TOL);
                    if !dup {
                        found.push(SaddleSolution { f_star: f, g_star: g, value });
                        if first_only {
                            return Ok(found);
                        }
                    }
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::Internal("support enumeration found no verified saddle point".into()));
    }
    Ok(found)
}

/// Saddle point of the expected game with the lexicographically smallest
/// support pair.
pub fn solve_saddle(spec: &GameSpec) -> Result<SaddleSolution> {
    enumerate(spec, true).map(|mut v| v.swap_remove(0))
}

/// Every distinct extreme saddle point found by the enumeration, in
/// enumeration order.
pub fn enumerate_saddles(spec: &GameSpec) -> Result<Vec<SaddleSolution>> {
    enumerate(spec, false)
}

/// Both players' logit responses `(β1(g), β2(f))`.
pub fn logit_responses(
    spec: &GameSpec,
    f: &MixedStrategy,
    g: &MixedStrategy,
    epsilon: f64,
) -> Result<(MixedStrategy, MixedStrategy)> {
    let b1 = softmax(&spec.payoff_vector(Player::P1, g)?, epsilon)?;
    let b2 = softmax(&spec.payoff_vector(Player::P2, f)?, epsilon)?;
    Ok((b1, b2))
}

fn blend(x: &MixedStrategy, target: &MixedStrategy, d: f64) -> MixedStrategy {
    MixedStrategy::from_raw(x.probs().iter().zip(target.probs()).map(|(a, b)| (1.0 - d) * a + d * b).collect())
}

fn log_softmax(u: &[f64], epsilon: f64) -> Vec<f64> {
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = u.iter().map(|x| ((x - top) / epsilon).exp()).sum::<f64>().ln();
    u.iter().map(|x| (x - top) / epsilon - lse).collect()
}

/// Damped fixed-point iteration for the logit equilibrium on the row
/// strategy, started from uniform:
///
/// ```text
/// f <- (1 - d) f + d β1(β2(f)),    g = β2(f)
/// ```
///
/// Eliminating `g` matters: the joint response map of a zero-sum game has a
/// Jacobian with purely imaginary eigenvalues `±iω`, `ω ~ 1/ε`, so a damped
/// joint iteration spirals and needs `d ~ ε²`.
///
/// The row strategy of the logit equilibrium is the unique maximizer of the
/// strictly concave
///
/// ```text
/// φ(f) = ε H(f) - ε log Σ_j exp(-(fᵀM)_j / ε)
/// ```
///
/// and `b - f`, `b = β1(β2(f))`, is an ascent direction with slope
/// `ε (KL(b‖f) + KL(f‖b))`. `damping` caps the weight `d`; a step is accepted
/// when the slope of `φ` along `b - f` is still non-negative at the new
/// point (the step stops short of the line maximum), otherwise `d` is halved.
/// After each acceptance `d` grows by 20% up to the cap.
pub fn solve_logit(spec: &GameSpec, epsilon: f64, damping: f64, tol: f64, max_iters: u64) -> Result<LogitEquilibrium> {
    solve_logit_traced(spec, epsilon, damping, tol, max_iters).map(|(l, _)| l)
}

/// [`solve_logit`] that also returns the residual after every accepted
/// iteration.
pub fn solve_logit_traced(
    spec: &GameSpec,
    epsilon: f64,
    damping: f64,
    tol: f64,
    max_iters: u64,
) -> Result<(LogitEquilibrium, Vec<f64>)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon = {epsilon} must be positive")));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::domain(format!("damping = {damping} must lie in (0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tol = {tol} must be positive")));
    }
    struct Point {
        f: MixedStrategy,
        g: MixedStrategy,
        b: MixedStrategy,
        log_b: Vec<f64>,
        residual: f64,
    }
    let respond = |f: MixedStrategy| -> Result<Point> {
        let g = softmax(&spec.payoff_vector(Player::P2, &f)?, epsilon)?;
        let u = spec.payoff_vector(Player::P1, &g)?;
        let b = softmax(&u, epsilon)?;
        // g is P2's exact response, so only P1's gap is non-zero.
        let residual = f.distance(&b);
        Ok(Point { f, g, b, log_b: log_softmax(&u, epsilon), residual })
    };
    let mut x = respond(MixedStrategy::uniform(spec.matrix.rows()))?;
    let mut history: Vec<f64> = Vec::new();
    let mut d = damping;
    let mut iterations = 0u64;
    while x.residual > tol && iterations < max_iters {
        let y = respond(blend(&x.f, &x.b, d))?;
        iterations += 1;
        let slope: f64 =
            (0..y.f.len()).map(|i| (y.log_b[i] - y.f[i].max(f64::MIN_POSITIVE).ln()) * (x.b[i] - x.f[i])).sum();
        if slope >= 0.0 || y.residual <= tol {
            x = y;
            history.push(x.residual);
            d = (1.2 * d).min(damping);
        } else if d > 1e-15 {
            d *= 0.5;
        } else {
            break;
        }
    }
    let (f, g, residual) = (x.f, x.g, x.residual);
    let converged = residual <= tol;
    Ok((LogitEquilibrium { f_eps: f, g_eps: g, epsilon, residual, iterations, converged }, history))
}

/// [`solve_logit`] with damping 0.5, tolerance 1e-10 and 10^6 iterations.
pub fn solve_logit_default(spec: &GameSpec, epsilon: f64) -> Result<LogitEquilibrium> {
    solve_logit(spec, epsilon, 0.5, 1e-10, 1_000_000)
}

pub fn is_epsilon_saddle(spec: &GameSpec, f: &MixedStrategy, g: &MixedStrategy, slack: f64) -> Result<bool> {
    if !(slack >= 0.0) {
        return Err(Error::domain(format!("slack = {slack} must be non-negative")));
    }
    // Exploitability is a difference of two O(|M|) sums; allow round-off.
    let scale = spec.matrix.min().abs().max(spec.matrix.max().abs()).max(1.0);
    Ok(spec.exploitability(f, g)? <= slack + 1e-12 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn security_game() -> GameSpec {
        GameSpec::from_rows(vec![vec![5.0, 2.0], vec![1.0, 3.0]]).unwrap()
    }

    /// Independent check of the saddle inequalities against every pure deviation.
    fn assert_saddle(spec: &GameSpec, s: &SaddleSolution) {
        for a in 0..spec.matrix.rows() {
            let e = MixedStrategy::vertex(spec.matrix.rows(), a).unwrap();
            assert!(spec.expected_value(&e, &s.g_star).unwrap() <= s.value + 1e-9);
        }
        for b in 0..spec.matrix.cols() {
            let e = MixedStrategy::vertex(spec.matrix.cols(), b).unwrap();
            assert!(spec.expected_value(&s.f_star, &e).unwrap() >= s.value - 1e-9);
        }
    }

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(subsets(4, 4).len(), 1);
    }

    #[test]
    fn linear_solver() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0], 1e-12).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn security_game_saddle() {
        let s = solve_saddle(&security_game()).unwrap();
        assert!(s.f_star.distance(&MixedStrategy::new(vec![0.4, 0.6]).unwrap()) < 1e-12);
        assert!(s.g_star.distance(&MixedStrategy::new(vec![0.2, 0.8]).unwrap()) < 1e-12);
        assert!((s.value - 2.6).abs() < 1e-12);
        assert_saddle(&security_game(), &s);
    }

    #[test]
    fn matching_pennies() {
        let spec = GameSpec::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let s = solve_saddle(&spec).unwrap();
        assert_eq!(s.f_star.probs(), &[0.5, 0.5]);
        assert_eq!(s.g_star.probs(), &[0.5, 0.5]);
        assert!(s.value.abs() < 1e-15);
    }

    #[test]
    fn dominated_row_tie_break() {
        let spec = GameSpec::from_rows(vec![vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let s = solve_saddle(&spec).unwrap();
        assert_eq!(s.f_star.probs(), &[1.0, 0.0]);
        assert_eq!(s.g_star.probs(), &[1.0, 0.0]);
        assert_eq!(s.value, 2.0);
        let all = enumerate_saddles(&spec).unwrap();
        assert!(all.len() >= 2);
        for s in &all {
            assert_saddle(&spec, s);
        }
    }

    #[test]
    fn one_by_one_and_noise_shift() {
        let spec = GameSpec::from_rows(vec![vec![7.0]]).unwrap();
        let s = solve_saddle(&spec).unwrap();
        assert_eq!(s.value, 7.0);
        let noisy = security_game().with_noise(crate::game::NoiseModel::uniform(0.0, 2.0).unwrap());
        assert!((solve_saddle(&noisy).unwrap().value - 3.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_games() {
        let spec = GameSpec::from_rows(vec![vec![0.0; 13]; 2]).unwrap();
        assert!(matches!(solve_saddle(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_2x2() {
        // Interior equilibrium of [[a, b], [c, d]] without a pure saddle:
        // f0 = (d - c) / (a - b - c + d), g0 = (d - b) / (a - b - c + d).
        let mut rng = RandomSource::new(17);
        let mut checked = 0;
        while checked < 200 {
            let [a, b, c, d]: [f64; 4] = std::array::from_fn(|_| rng.uniform_range(-5.0, 5.0));
            let den = a - b - c + d;
            let f0 = (d - c) / den;
            let g0 = (d - b) / den;
            if !(0.01..0.99).contains(&f0) || !(0.01..0.99).contains(&g0) {
                continue;
            }
            let spec = GameSpec::from_rows(vec![vec![a, b], vec![c, d]]).unwrap();
            let s = solve_saddle(&spec).unwrap();
            assert!((s.f_star[0] - f0).abs() < 1e-12, "{a} {b} {c} {d}");
            assert!((s.g_star[0] - g0).abs() < 1e-12);
            assert!((s.value - (a * d - b * c) / den).abs() < 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn random_games_verified() {
        let mut rng = RandomSource::new(99);
        for trial in 0..60 {
            let m = 1 + trial % 5;
            let n = 1 + (trial / 5) % 5;
            let rows = (0..m).map(|_| (0..n).map(|_| rng.uniform_range(-3.0, 3.0)).collect()).collect();
            let spec = GameSpec::from_rows(rows).unwrap();
            let s = solve_saddle(&spec).unwrap();
            assert_saddle(&spec, &s);
            assert!(spec.exploitability(&s.f_star, &s.g_star).unwrap() < 1e-9);
        }
    }

    #[test]
    fn integer_degenerate_games() {
        // Small-integer games are frequently degenerate.
        let mut rng = RandomSource::new(3);
        for _ in 0..200 {
            let rows = (0..3).map(|_| (0..4).map(|_| (rng.uniform() * 3.0).floor()).collect()).collect();
            let spec = GameSpec::from_rows(rows).unwrap();
            let s = solve_saddle(&spec).unwrap();
            assert_saddle(&spec, &s);
        }
    }

    #[test]
    fn logit_high_temperature_is_uniform() {
        let l = solve_logit_default(&security_game(), 100.0).unwrap();
        assert!(l.converged);
        assert!(l.f_eps.distance(&MixedStrategy::uniform(2)) < 0.01);
        assert!(l.g_eps.distance(&MixedStrategy::uniform(2)) < 0.01);
    }

    #[test]
    fn logit_matching_pennies() {
        let spec = GameSpec::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        for eps in [0.01, 0.5, 3.0] {
            let l = solve_logit_default(&spec, eps).unwrap();
            assert!(l.converged);
            assert!(l.f_eps.distance(&MixedStrategy::uniform(2)) < 1e-12);
            assert!(l.g_eps.distance(&MixedStrategy::uniform(2)) < 1e-12);
        }
    }

    #[test]
    fn logit_small_temperature_near_saddle() {
        let spec = security_game();
        let l = solve_logit_default(&spec, 0.05).unwrap();
        assert!(l.converged, "residual {}", l.residual);
        assert!(l.residual <= 1e-10);
        let s = solve_saddle(&spec).unwrap();
        assert!(l.f_eps.distance(&s.f_star) < 0.05);
        assert!(l.g_eps.distance(&s.g_star) < 0.05);
        assert!(l.f_eps.probs().iter().chain(l.g_eps.probs()).all(|p| *p > 0.0));
        let (b1, b2) = logit_responses(&spec, &l.f_eps, &l.g_eps, 0.05).unwrap();
        assert!(l.f_eps.distance(&b1) <= 1e-10 && l.g_eps.distance(&b2) <= 1e-10);
    }

    #[test]
    fn logit_distance_shrinks_with_temperature() {
        let spec = security_game();
        let s = solve_saddle(&spec).unwrap();
        let mut last = f64::INFINITY;
        for eps in [1.0, 0.3, 0.1, 0.05, 0.01] {
            let l = solve_logit_default(&spec, eps).unwrap();
            assert!(l.converged, "eps {eps}: residual {}", l.residual);
            let d = l.f_eps.distance(&s.f_star).max(l.g_eps.distance(&s.g_star));
            assert!(d <= last, "eps {eps}: {d} > {last}");
            last = d;
        }
    }

    #[test]
    fn logit_residual_non_increasing_over_windows() {
        let games = [
            security_game(),
            GameSpec::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
            GameSpec::from_rows(vec![vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap(),
            GameSpec::from_rows(vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]).unwrap(),
        ];
        for spec in &games {
            for eps in [1.0, 0.1, 0.05, 0.01] {
                for damping in [0.5, 0.2] {
                    let (l, hist) = solve_logit_traced(spec, eps, damping, 1e-10, 1_000_000).unwrap();
                    assert!(l.converged, "eps {eps}: residual {}", l.residual);
                    for w in hist.windows(51) {
                        assert!(w[50] <= w[0], "eps {eps} damping {damping}: {} -> {}", w[0], w[50]);
                    }
                }
            }
        }
    }

    #[test]
    fn logit_non_converged_flag() {
        let l = solve_logit(&security_game(), 0.05, 0.5, 1e-14, 3).unwrap();
        assert!(!l.converged);
        assert_eq!(l.iterations, 3);
    }

    #[test]
    fn logit_rejects_bad_arguments() {
        let spec = security_game();
        assert!(solve_logit(&spec, 0.0, 0.5, 1e-10, 10).is_err());
        assert!(solve_logit(&spec, 0.1, 0.0, 1e-10, 10).is_err());
        assert!(solve_logit(&spec, 0.1, 1.5, 1e-10, 10).is_err());
        assert!(solve_logit(&spec, 0.1, 0.5, 0.0, 10).is_err());
    }

    #[test]
    fn epsilon_saddle_examples() {
        let spec = security_game();
        let s = solve_saddle(&spec).unwrap();
        assert!(is_epsilon_saddle(&spec, &s.f_star, &s.g_star, 1e-9).unwrap());
        assert!(is_epsilon_saddle(&spec, &s.f_star, &s.g_star, 0.0).unwrap());
        let u = MixedStrategy::uniform(2);
        assert!(!is_epsilon_saddle(&spec, &u, &u, 0.5).unwrap());
    }

    proptest::proptest! {
        #[test]
        fn logit_fixed_point_on_random_games(
            n in 2usize..5,
            m in 2usize..5,
            vals in proptest::collection::vec(-3.0f64..3.0, 16),
            eps in 0.05f64..2.0,
        ) {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| vals[i * 4..i * 4 + m].to_vec()).collect();
            let spec = GameSpec::from_rows(rows).unwrap();
            let l = solve_logit_default(&spec, eps).unwrap();
            proptest::prop_assert!(l.converged);
            let (b1, b2) = logit_responses(&spec, &l.f_eps, &l.g_eps, eps).unwrap();
            proptest::prop_assert!(l.f_eps.distance(&b1) <= 1e-10);
            proptest::prop_assert!(l.g_eps.distance(&b2) <= 1e-10);
        }
    }
}

//! Fixed eight-point Gauss–Legendre rule on cells.

/// Nodes of the eight-point rule on [-1, 1].
const NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

const WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

pub const ORDER: usize = 8;

/// Quadrature points and weights mapped onto `[a, b]`.
pub fn cell_rule(a: f64, b: f64) -> [(f64, f64); ORDER] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = [(0.0, 0.0); ORDER];
    for (slot, (t, w)) in out.iter_mut().zip(NODES.iter().zip(WEIGHTS.iter())) {
        *slot = (mid + half * t, half * w);
    }
    out
}

/// Integrates `f` over `[a, b]` with the eight-point rule.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    cell_rule(a, b).iter().map(|&(x, w)| w * f(x)).sum()
}

/// Closed form of the integral of `exp(rate * x)` over `[a, b]`.
pub fn exp_integral(rate: f64, a: f64, b: f64) -> f64 {
    if rate == 0.0 {
        return b - a;
    }
    // exp(rate*a) * expm1(rate*(b-a)) / rate keeps precision on thin cells
    (rate * a).exp() * (rate * (b - a)).exp_m1() / rate
}

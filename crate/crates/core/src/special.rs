//! Lattice zeta sums needed by the singular-integral quadrature.

/// `B_{2j} / (2j)!` for j = 1..=9.
const BERNOULLI_OVER_FACTORIAL: [f64; 9] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
];

/// Hurwitz zeta `ζ(σ, a) = Σ_{k≥0} (k + a)^{-σ}` for `σ > 1`, `a > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(sigma: f64, a: f64) -> f64 {
    debug_assert!(sigma > 1.0 && a > 0.0);
    const DIRECT: usize = 24;
    let mut sum: f64 = (0..DIRECT).map(|k| (k as f64 + a).powf(-sigma)).sum();
    let x = DIRECT as f64 + a;
    sum += x.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * x.powf(-sigma);
    // Rising factorial σ(σ+1)…(σ+2j-2) times x^{-σ-2j+1}.
    let mut rising = sigma;
    let mut power = x.powf(-sigma - 1.0);
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += coeff * rising * power;
        let n = 2.0 * (j as f64 + 1.0);
        rising *= (sigma + n - 1.0) * (sigma + n);
        power /= x * x;
    }
    sum
}

pub fn riemann_zeta(sigma: f64) -> f64 {
    hurwitz_zeta(sigma, 1.0)
}

/// Dirichlet beta `β(σ) = Σ_{n≥0} (-1)^n (2n+1)^{-σ}`.
pub fn dirichlet_beta(sigma: f64) -> f64 {
    4f64.powf(-sigma) * (hurwitz_zeta(sigma, 0.25) - hurwitz_zeta(sigma, 0.75))
}

/// `Σ_{n ∈ Z^dim \ {0}} |n|^{-σ}` for dim 1 or 2.
pub fn lattice_zeta(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => 2.0 * riemann_zeta(sigma),
        2 => 4.0 * riemann_zeta(sigma / 2.0) * dirichlet_beta(sigma / 2.0),
        _ => unreachable!("dimension checked by Grid"),
    }
}

/// Surface area of the unit sphere `S^{dim-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => unreachable!("dimension checked by Grid"),
    }
}

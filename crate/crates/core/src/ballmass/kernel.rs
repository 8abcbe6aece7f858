use crate::lattice::Dim;
use std::f64::consts::PI;

/// Below this argument `J₁` is summed from its power series.
const SERIES_MAX: f64 = 12.0;

/// Bessel function `J₁(x)`; odd in `x`.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x <= SERIES_MAX {
        0.5 * x * j1_over_x_series(x)
    } else {
        j1_asymptotic(x)
    }
}

// 2 J₁(x)/x = Σ_k (−1)^k (x/2)^{2k} / (k! (k+1)!)
fn j1_over_x_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k as f64 * (k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Hankel expansion, summed up to its smallest term.
fn j1_asymptotic(x: f64) -> f64 {
    let mu = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= last {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Normalized Fourier transform of the unit ball:
/// `∫_{B_x(r)} e^{i⟨y,ζ⟩} dy = vol(B_r) ψ_d(r|ζ|) e^{i⟨x,ζ⟩}`.
pub fn ball_kernel(rho: f64, dim: Dim) -> f64 {
    let rho = rho.abs();
    match dim {
        Dim::Two => {
            if rho <= SERIES_MAX {
                j1_over_x_series(rho)
            } else {
                2.0 * j1_asymptotic(rho) / rho
            }
        }
        Dim::Three => {
            if rho < 1.0 {
                // 3 Σ_{k≥1} (−1)^{k+1} 2k ρ^{2k−2} / (2k+1)!
                let mut sum = 0.0;
                let mut pow = 1.0;
                let mut fact = 6.0;
                for k in 1..20 {
                    let kf = k as f64;
                    let term = 2.0 * kf * pow / fact;
                    sum += if k % 2 == 1 { term } else { -term };
                    pow *= rho * rho;
                    fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
                }
                3.0 * sum
            } else {
                3.0 * (rho.sin() - rho * rho.cos()) / (rho * rho * rho)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gauss_legendre;

    // (1/2π) ∫_0^{2π} cos(θ − x sin θ) dθ by the trapezoid rule over a full
    // period, which converges geometrically for this analytic integrand.
    fn j1_integral(x: f64) -> f64 {
        let n = 4 * (x as usize) + 64;
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let t = i as f64 * h;
                (t - x * t.sin()).cos()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn j1_against_integral_representation() {
        for x in [1.0, 5.0, 20.0, 7.9, 8.1, 11.99, 12.01, 15.0, 40.0, 123.4] {
            let a = bessel_j1(x);
            let b = j1_integral(x);
            assert!((a - b).abs() < 1e-10, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn j1_small_argument() {
        assert_eq!(bessel_j1(0.0), 0.0);
        for x in [1e-6, 1e-7, 1e-8] {
            assert!((bessel_j1(x) / x - 0.5).abs() < 1e-12);
        }
        assert_eq!(bessel_j1(-2.0), -bessel_j1(2.0));
    }

    #[test]
    fn j1_dense_scan_against_integral() {
        let mut x = 0.0;
        while x < 60.0 {
            assert!((bessel_j1(x) - j1_integral(x)).abs() < 1e-10, "x={x}");
            x += 0.173;
        }
    }

    #[test]
    fn kernel_values() {
        for dim in [Dim::Two, Dim::Three] {
            assert_eq!(ball_kernel(0.0, dim), 1.0);
            let mut rho = 0.0;
            while rho < 80.0 {
                assert!(ball_kernel(rho, dim).abs() <= 1.0 + 1e-15);
                rho += 0.37;
            }
        }
        assert!((ball_kernel(PI, Dim::Three) - 3.0 / (PI * PI)).abs() < 1e-15);
        // Series and closed form meet at ρ = 1.
        let a = ball_kernel(1.0 - 1e-12, Dim::Three);
        let b = ball_kernel(1.0, Dim::Three);
        assert!((a - b).abs() < 1e-12);
    }

    // (1/π) ∫_0^1 ∫_0^{2π} e^{iρ s cos θ} s dθ ds on the unit disc.
    #[test]
    fn kernel_2d_against_disc_quadrature() {
        let rho = 3.0;
        let (nodes, weights) = gauss_legendre(40);
        let n_theta = 64;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = 0.5 * (x + 1.0);
            let mut ring = 0.0;
            for j in 0..n_theta {
                let t = 2.0 * PI * j as f64 / n_theta as f64;
                ring += (rho * s * t.cos()).cos();
            }
            acc += 0.5 * w * s * ring * 2.0 * PI / n_theta as f64;
        }
        let value = acc / PI;
        assert!((value - ball_kernel(rho, Dim::Two)).abs() < 1e-6);
    }

    // (3/4π) ∫_{|y|≤1} e^{iρ y₃} dy = (3/2) ∫_0^1 s² ∫_{-1}^1 cos(ρ s u) du ds.
    #[test]
    fn kernel_3d_against_ball_quadrature() {
        for rho in [0.5, 3.0, 9.0] {
            let (nodes, weights) = gauss_legendre(40);
            let mut acc = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                let s = 0.5 * (x + 1.0);
                for (u, v) in nodes.iter().zip(&weights) {
                    acc += 0.5 * w * v * s * s * (rho * s * u).cos();
                }
            }
            assert!(
                (1.5 * acc - ball_kernel(rho, Dim::Three)).abs() < 1e-10,
                "ρ={rho}"
            );
        }
    }
}

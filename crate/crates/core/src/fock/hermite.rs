use super::C64;

/// Physicists' Hermite polynomial `H_n(z)` at a complex argument.
pub fn hermite_polynomial(n: usize, z: C64) -> C64 {
    let mut prev = C64::new(1.0, 0.0);
    if n == 0 {
        return prev;
    }
    let mut cur = z * 2.0;
    for k in 1..n {
        let next = z * cur * 2.0 - prev * (2.0 * k as f64);
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized oscillator eigenfunctions `ψ_0(x) … ψ_(count-1)(x)`, with
/// `ψ_n(x) = (√π 2^n n!)^(-1/2) H_n(x) e^(-x²/2)`.
///
/// Uses the three-term recurrence on the normalized functions, which stays
/// finite for large `n` where `H_n` and `n!` individually overflow.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_polynomials() {
        let z = C64::new(0.7, -0.2);
        assert!((hermite_polynomial(2, z) - (z * z * 4.0 - 2.0)).norm() < 1e-14);
        assert!((hermite_polynomial(3, z) - (z * z * z * 8.0 - z * 12.0)).norm() < 1e-13);
    }

    #[test]
    fn functions_match_closed_form() {
        let x = 0.9_f64;
        let psi = hermite_functions(x, 4);
        let fact = [1.0, 1.0, 2.0, 6.0];
        for n in 0..4 {
            let norm = 1.0 / (std::f64::consts::PI.sqrt() * 2f64.powi(n as i32) * fact[n]).sqrt();
            let want = norm * hermite_polynomial(n, C64::new(x, 0.0)).re * (-x * x / 2.0).exp();
            assert!((psi[n] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn functions_are_orthonormal() {
        let h = 0.01;
        let count = 6;
        let mut gram = vec![vec![0.0; count]; count];
        let mut x = -12.0;
        while x <= 12.0 {
            let psi = hermite_functions(x, count);
            for i in 0..count {
                for j in 0..count {
                    gram[i][j] += psi[i] * psi[j] * h;
                }
            }
            x += h;
        }
        for i in 0..count {
            for j in 0..count {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - want).abs() < 1e-9);
            }
        }
    }
}

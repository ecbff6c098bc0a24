//! Dense matrix exponential by scaling-and-squaring with a degree-13 Pade
//! approximant (Higham's method).

use nalgebra::DMatrix;

const PADE13_THETA: f64 = 5.371920351148152;

#[rustfmt::skip]
const B: [f64; 14] = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
];

/// Computes exp(A) for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    // 1-norm based scaling.
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a / 2f64.powi(s as i32);

    let id = DMatrix::identity(n, n);
    let a2 = &a_scaled * &a_scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9])
        + &a6 * B[7]
        + &a4 * B[5]
        + &a2 * B[3]
        + &id * B[1];
    let u = &a_scaled * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8])
        + &a6 * B[6]
        + &a4 * B[4]
        + &a2 * B[2]
        + &id * B[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is singular; input matrix is pathological");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_zero_is_identity() {
        let z = DMatrix::zeros(4, 4);
        let e = expm(&z);
        assert!((e - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn diagonal_case() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let e = expm(&d);
        for (i, &x) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_generator() {
        // exp of [[0, -t], [t, 0]] is a rotation by t.
        let t = 0.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let a = DMatrix::from_row_slice(2, 2, &[-30.0, 1.0, 0.0, -40.0]);
        let e = expm(&a);
        // Upper-triangular: eigenvalue exponentials on the diagonal.
        assert!((e[(0, 0)] - (-30.0f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-40.0f64).exp()).abs() < 1e-15);
        // Off-diagonal of exp([[a, 1], [0, b]]) is (e^a - e^b)/(a - b).
        let expect = ((-30.0f64).exp() - (-40.0f64).exp()) / 10.0;
        assert!((e[(0, 1)] - expect).abs() < 1e-16);
    }

    #[test]
    fn semigroup_property() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.3, -0.1, 0.2, -0.1, 0.5, 0.0, 0.2, 0.0, -0.4],
        );
        let e1 = expm(&a);
        let e2 = expm(&(&a * 2.0));
        assert!((&e1 * &e1 - e2).amax() < 1e-12);
    }
}

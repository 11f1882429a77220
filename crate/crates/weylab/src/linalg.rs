use nalgebra::DMatrix;
use num_complex::Complex64;

/// Eigenvalues of a complex Hermitian matrix via the real symmetric
/// embedding [[Re, −Im], [Im, Re]], whose spectrum is that of the original
/// matrix with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut embed = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i, j + n)] = -z.im;
            embed[(i + n, j)] = z.im;
            embed[(i + n, j + n)] = z.re;
        }
    }
    // symmetrize away representation round-off before factoring
    let embed = (&embed + embed.transpose()) * 0.5;
    let mut eigs: Vec<f64> = embed.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs.into_iter().step_by(2).collect()
}

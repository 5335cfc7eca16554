//! Thin LAPACK wrappers over nalgebra storage (both column-major).
//!
//! nalgebra's own complex SVD can return a wrong factorization for some
//! nearly rank-deficient inputs, so every SVD and Hermitian eigensolve goes
//! through LAPACK's divide-and-conquer drivers instead.

extern crate lapack_src;

use std::sync::Once;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

static SERIAL_BLAS: Once = Once::new();

// Parallelism lives in rayon above this layer. A threaded BLAS underneath
// oversubscribes and lets round-off depend on its own thread split.
fn serial_blas() {
    SERIAL_BLAS.call_once(|| unsafe { openblas_set_num_threads(1) });
}

fn check(info: i32, context: &'static str) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Residual {
            context,
            residual: info as f64,
            tolerance: 0.0,
        })
    }
}

/// Thin SVD `m = u · diag(s) · vt` with `s` in descending order.
pub struct Svd {
    pub u: DMatrix<Complex64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<Complex64>,
}

pub fn svd(m: &DMatrix<Complex64>) -> Result<Svd> {
    serial_blas();
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::from_element(rows, 0, ZERO),
            s: Vec::new(),
            vt: DMatrix::from_element(0, cols, ZERO),
        });
    }
    let mut a = m.clone();
    let mut s = vec![0.0; k];
    let mut u = DMatrix::from_element(rows, k, ZERO);
    let mut vt = DMatrix::from_element(k, cols, ZERO);
    let mx = rows.max(cols);
    let rwork_len = k * (5 * k + 7).max(2 * mx + 2 * k + 1);
    let mut rwork = vec![0.0; rwork_len];
    let mut iwork = vec![0i32; 8 * k];
    let mut work = vec![ZERO; 1];
    let mut info = 0;
    let (r, c, ki) = (rows as i32, cols as i32, k as i32);
    unsafe {
        lapack::zgesdd(
            b'S',
            r,
            c,
            a.as_mut_slice(),
            r,
            &mut s,
            u.as_mut_slice(),
            r,
            vt.as_mut_slice(),
            ki,
            &mut work,
            -1,
            &mut rwork,
            &mut iwork,
            &mut info,
        );
    }
    check(info, "zgesdd workspace query")?;
    let lwork = work[0].re as usize;
    work = vec![ZERO; lwork.max(1)];
    unsafe {
        lapack::zgesdd(
            b'S',
            r,
            c,
            a.as_mut_slice(),
            r,
            &mut s,
            u.as_mut_slice(),
            r,
            vt.as_mut_slice(),
            ki,
            &mut work,
            lwork as i32,
            &mut rwork,
            &mut iwork,
            &mut info,
        );
    }
    check(info, "zgesdd did not converge")?;
    Ok(Svd { u, s, vt })
}

pub fn singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    Ok(svd(m)?.s)
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub fn eigh(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    serial_blas();
    let n = m.nrows();
    let mut a = m.clone();
    let mut w = vec![0.0; n];
    if n == 0 {
        return Ok((DVector::from_vec(w), a));
    }
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    let mut info = 0;
    let ni = n as i32;
    unsafe {
        lapack::dsyevd(
            b'V',
            b'U',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            -1,
            &mut iwork,
            -1,
            &mut info,
        );
    }
    check(info, "dsyevd workspace query")?;
    let (lwork, liwork) = (work[0] as usize, iwork[0] as usize);
    work = vec![0.0; lwork.max(1)];
    iwork = vec![0; liwork.max(1)];
    unsafe {
        lapack::dsyevd(
            b'V',
            b'U',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    check(info, "dsyevd did not converge")?;
    Ok((DVector::from_vec(w), a))
}

/// Eigenvalues (ascending) of a complex Hermitian matrix.
pub fn eigvalsh(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    serial_blas();
    let n = m.nrows();
    let mut a = m.clone();
    let mut w = vec![0.0; n];
    if n == 0 {
        return Ok(w);
    }
    let mut work = vec![ZERO; 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    let mut info = 0;
    let ni = n as i32;
    unsafe {
        lapack::zheevd(
            b'N',
            b'U',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            -1,
            &mut rwork,
            -1,
            &mut iwork,
            -1,
            &mut info,
        );
    }
    check(info, "zheevd workspace query")?;
    let (lwork, lrwork, liwork) = (work[0].re as usize, rwork[0] as usize, iwork[0] as usize);
    work = vec![ZERO; lwork.max(1)];
    rwork = vec![0.0; lrwork.max(1)];
    iwork = vec![0; liwork.max(1)];
    unsafe {
        lapack::zheevd(
            b'N',
            b'U',
            ni,
            a.as_mut_slice(),
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    check(info, "zheevd did not converge")?;
    Ok(w)
}

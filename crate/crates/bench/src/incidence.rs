//! First-order Kuramoto written directly as `ω - σ B sin(Bᵀ θ)`.

use std::cell::RefCell;

use netdyn::{graphs, DynamicalSystem, Error, Graph, Result};
use sprs::prod::mul_acc_mat_vec_csr;
use sprs::CsMat;

pub struct IncidenceKuramoto {
    b: CsMat<f64>,
    bt: CsMat<f64>,
    omega: Vec<f64>,
    sigma: f64,
    scratch: RefCell<Vec<f64>>,
}

impl IncidenceKuramoto {
    pub fn new(graph: &Graph, omega: Vec<f64>, sigma: f64) -> Result<Self> {
        let b = graphs::oriented_incidence_sparse(graph)?;
        Self::from_incidence(b, omega, sigma)
    }

    /// `b` is the `N x M` oriented incidence matrix in CSR form.
    pub fn from_incidence(b: CsMat<f64>, omega: Vec<f64>, sigma: f64) -> Result<Self> {
        if b.rows() != omega.len() {
            return Err(Error::LengthMismatch {
                what: "frequencies",
                expected: b.rows(),
                got: omega.len(),
            });
        }
        let bt = b.transpose_view().to_csr();
        let m = b.cols();
        Ok(Self {
            b,
            bt,
            omega,
            sigma,
            scratch: RefCell::new(vec![0.0; m]),
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
}

impl DynamicalSystem<()> for IncidenceKuramoto {
    fn dim(&self) -> usize {
        self.omega.len()
    }

    fn rhs(&self, du: &mut [f64], theta: &[f64], _: &(), _t: f64) {
        let mut s = self.scratch.borrow_mut();
        s.fill(0.0);
        mul_acc_mat_vec_csr(self.bt.view(), theta, &mut s[..]);
        for x in s.iter_mut() {
            *x = x.sin();
        }
        du.fill(0.0);
        mul_acc_mat_vec_csr(self.b.view(), &s[..], &mut *du);
        for (d, w) in du.iter_mut().zip(&self.omega) {
            *d = w - self.sigma * *d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_by_hand() {
        let g = Graph::undirected(2, vec![(0, 1)]).unwrap();
        let sys = IncidenceKuramoto::new(&g, vec![0.1, 0.2], 1.0).unwrap();
        let mut du = [0.0; 2];
        sys.rhs(&mut du, &[0.0, std::f64::consts::FRAC_PI_2], &(), 0.0);
        assert!((du[0] - 1.1).abs() < 1e-15);
        assert!((du[1] - (0.2 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn synchronous_state_gives_frequencies() {
        let g = graphs::watts_strogatz(12, 4, 0.3, 2).unwrap();
        let omega: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let sys = IncidenceKuramoto::new(&g, omega.clone(), 5.0).unwrap();
        let mut du = vec![0.0; 12];
        sys.rhs(&mut du, &[0.7; 12], &(), 0.0);
        assert_eq!(du, omega);
    }

    #[test]
    fn frequency_length_checked() {
        let g = Graph::undirected(3, vec![(0, 1)]).unwrap();
        assert!(IncidenceKuramoto::new(&g, vec![0.0; 2], 1.0).is_err());
    }
}

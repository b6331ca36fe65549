/*!
Numerical tools for studying how eigenfunctions of perturbed quantum
systems spread over the unperturbed basis.

The crate builds Hamiltonians of the form `H = H0 + lambda V` for five
model families, splits each eigenfunction into a nonperturbative part
(a small window of strongly mixed basis states) and a perturbative tail
(reconstructible order by order), and measures how the component and
level-spacing distributions approach their random-matrix limits as the
coupling grows.

# Quick start

Build a model, diagonalize it, and look at one eigenfunction:

```
use efchaos::models::{self, ModelKind};

let model = models::build_default(ModelKind::DefectIsing, 0)?;
let solution = model.solve(0.5)?;

// Components of the 100th eigenfunction over the unperturbed basis.
let c = solution.eigenvector(100);
assert_eq!(c.len(), 1024);
let norm: f64 = c.iter().map(|x| x * x).sum();
assert!((norm - 1.0).abs() < 1e-10);
# Ok::<(), efchaos::Error>(())
```

# Layout

* [`models`]: the five Hamiltonian families with shared defaults.
* [`linalg`], [`sparse`]: dense symmetric storage, the eigensolver
  wrapper, and a compressed sparse row form for fast matrix-vector
  products.
* [`power`]: spectral-radius estimation for non-symmetric operators,
  used to decide whether a perturbative expansion converges.
* [`seeds`]: deterministic seed derivation so every run is replayable.

Higher layers (eigenfunction partitioning, distribution statistics, and
the scan pipeline) build strictly on these.
*/

#![deny(missing_docs)]

pub mod efstats;
pub mod error;
pub mod gbwpt;
pub mod histogram;
mod lapack;
pub mod linalg;
pub mod spacing;
pub mod models;
pub mod power;
pub mod seeds;
pub mod sparse;

pub use error::{Error, Result};

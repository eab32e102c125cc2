//! Points `θ(η)` built on fast-growing subsequences of the moduli, the
//! Fourier coefficients of the law of `e^{2iπθ(ξ)}` for fair random bits
//! `ξ`, Wiener averages along the good sequence, and the Dirichlet
//! diagnostics `ν̂(m_{j_n}) = L(m_{j_n} θ)`.

mod dirichlet;
mod eta;
mod fourier;
mod selection;

pub use dirichlet::{
    dirichlet_check, dirichlet_rows_to_csv, dirichlet_rows_to_json, DirichletRow,
    DIRICHLET_CSV_HEADER,
};
pub use eta::{all_eta_words, eta_to_string, mtheta_bound, parse_eta, theta_of_eta, EtaPoint};
pub use fourier::{
    eta_average_of_l, mu_hat, mu_hat_mc, nu_hat, wiener_average, wiener_average_mc,
    wiener_rows_to_csv, wiener_rows_to_json, McEstimate, WienerEstimate, WienerMethod, MC_CHUNK,
    WIENER_CSV_HEADER,
};
pub use selection::{
    select_subsequence, verify_selection, Mode, SubsequenceSelection, DEFAULT_WINDOW,
};

//! Anytime-valid tests and confidence sequences for the mean of a bounded
//! random variable, built on coin-betting e-variables.
//!
//! The crate is organised by layer:
//!
//! * [`domain`]: finite sample grids, discrete laws, two-point measures.
//! * [`evariables`]: single-round e-variables, a grid validity oracle and
//!   dominating coin-bets.
//! * [`betting`]: betting strategies, including the universal portfolio.
//! * [`game`]: the testing-by-betting game and wealth ledgers.
//! * [`confseq`]: confidence sequences from a grid of games.
//! * [`multiround`]: multi-round coin-bets, e-process audits, two-round
//!   domination.
//! * [`iid`]: the i.i.d. two-draw case on `{0, 1/2, 1}`.
//! * [`io`]: CSV table formats.

pub mod betting;
pub mod confseq;
pub mod domain;
pub mod error;
pub mod evariables;
pub mod game;
pub mod iid;
pub mod io;
pub mod multiround;

pub use betting::{BettingStrategy, PortfolioPosterior, Strategy, StrategySpec, UniversalPortfolio};
pub use confseq::{ConfidenceState, CsInterval};
pub use domain::{DiscreteDistribution, SampleSpace, TwoPointMeasure};
pub use error::{Error, Result};
pub use evariables::{CoinBetEVariable, DominationCertificate, HoeffdingEVariable, TabulatedEVariable, ValidityReport};
pub use game::{LedgerRow, WealthLedger};
pub use iid::XiStats;
pub use multiround::{EProcess, MultiRoundCoinBet, PairTable, StoppingMask, TreeHypothesis};

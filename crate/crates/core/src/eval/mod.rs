//! Span reconstruction, exact-match scoring and long-tail analysis.

mod analysis;
mod score;
mod spans;
mod ttest;

pub use analysis::{compare_reports, topk_analysis, Comparison, QuantileTable, QuartileBucket, QuartileMode};
pub use score::{score, ti_score, MacroSet, MetricsReport, Prf, ScoreOptions, TypeScore, TRIGGER};
pub use spans::decode_spans;
pub use ttest::{ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_two_sided_p, TTest};

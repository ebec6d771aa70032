//! Built-in criterion catalog: the 37 financial ratios usable as input and
//! the six retained criteria.

use super::{CriterionSpec, Dimension, Direction};

use Dimension::*;
use Direction::*;

const RATIOS: &[(&str, &str, Dimension, Direction)] = &[
    ("EBIT_TA", "EBIT/tot. assets", Profitability, Increasing),
    ("LTDR", "Long-term debt ratio", Profitability, Decreasing),
    ("OP_MARG", "Operating margin", Profitability, Increasing),
    ("PROF_MARG", "Profit margin", Profitability, Increasing),
    ("ROE", "ROE", Profitability, Increasing),
    ("ROA", "ROA", Profitability, Increasing),
    ("ROCE", "ROCE", Profitability, Increasing),
    ("EBIT_EQ", "EBIT/shareholder funds", Profitability, Increasing),
    ("EBITDA_TA", "EBITDA/tot. assets", Profitability, Increasing),
    ("CF_TA", "Cash flow/tot. assets", Profitability, Increasing),
    ("CF_EQ", "Cash flow to equity", Profitability, Increasing),
    ("EQ_RATIO", "Equity ratio", FinancialStructure, Increasing),
    ("FAT", "Fixed asset turnover", FinancialStructure, Increasing),
    ("TD_TA", "Tot. debts/tot. assets", FinancialStructure, Decreasing),
    ("LTD_EQ", "Long-term debt/shareholder funds", FinancialStructure, Decreasing),
    ("NOWC", "Net op. work. capital/tot. assets", FinancialStructure, Increasing),
    ("TD_EQ", "Tot. debt/shareholder funds", FinancialStructure, Decreasing),
    ("CA_TA", "Current assets/tot. assets", Liquidity, Increasing),
    ("CR", "Current ratio", Liquidity, Increasing),
    ("DR", "Debt ratio", Liquidity, Decreasing),
    ("WC_TA", "Working capital/total assets", Liquidity, Increasing),
    ("CASH_CL", "Cash/current liability", Liquidity, Increasing),
    ("CASH_TA", "Cash/tot. assets", Liquidity, Increasing),
    ("CL_TA", "Current liability/tot. assets", Liquidity, Decreasing),
    ("CASH_CA", "Cash/current assets", Liquidity, Increasing),
    ("CF_CL", "Cash flow/current liabilities", Liquidity, Increasing),
    ("FE_EBITDA", "Financial expenses/EBITDA", Solvency, Decreasing),
    ("FE_NI", "Financial expenses/net income", Solvency, Decreasing),
    ("FE_TA", "Financial expenses/tot. assets", Solvency, Decreasing),
    ("CL_TS", "Current liabilities/tot. sales", Turnover, Decreasing),
    ("CA_TS", "Current assets/tot. sales", Turnover, Decreasing),
    ("WC_TS", "Work. capital/tot. sales", Turnover, Increasing),
    ("CF_NS", "Cash flow/sales", Activity, Increasing),
    ("GROW_TA", "Growth ratio of tot. assets", Activity, Increasing),
    ("EBITDA_TS", "EBITDA/tot. sales", Activity, Increasing),
    ("TA", "Tot. assets", Size, Increasing),
    ("SALES", "Tot. sales revenue", Size, Increasing),
];

/// Ids of the six retained criteria, in reporting order.
pub const RETAINED: [&str; 6] = ["ROA", "EBITDA_TA", "EQ_RATIO", "TD_TA", "CA_TS", "CA_TA"];

/// Highly correlated retained pairs.
pub const CORRELATED: [(&str, &str); 2] = [("ROA", "EBITDA_TA"), ("EQ_RATIO", "TD_TA")];

pub fn ratio_catalog() -> Vec<CriterionSpec> {
    RATIOS
        .iter()
        .map(|&(id, name, dimension, direction)| CriterionSpec {
            id: id.to_string(),
            name: name.to_string(),
            dimension,
            direction,
        })
        .collect()
}

pub fn retained_six() -> Vec<CriterionSpec> {
    let all = ratio_catalog();
    RETAINED.iter().map(|id| all.iter().find(|c| c.id == *id).cloned().expect("retained id in catalog")).collect()
}

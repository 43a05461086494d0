//! Batch filter expressions: comma-separated comparisons such as
//! `pe>=1,p=2` on `p` (|P|), `pe` (|PE|) and `rk2`. Rows that failed are
//! always kept so errors stay visible.

use std::str::FromStr;

use crate::report::{AnalysisReport, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Key {
    P,
    Pe,
    Rk2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filter {
    clauses: Vec<(Key, Op, usize)>,
}

#[derive(Debug, thiserror::Error)]
#[error("bad filter clause {0:?}")]
pub struct FilterError(String);

impl FromStr for Filter {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut clauses = Vec::new();
        for clause in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let bad = || FilterError(clause.to_string());
            let pos = clause.find(|c: char| "<>=!".contains(c)).ok_or_else(bad)?;
            let (key, rest) = clause.split_at(pos);
            let op_len = rest.find(|c: char| !"<>=!".contains(c)).ok_or_else(bad)?;
            let (op, value) = rest.split_at(op_len);
            let key = match key.trim() {
                "p" => Key::P,
                "pe" => Key::Pe,
                "rk2" => Key::Rk2,
                _ => return Err(bad()),
            };
            let op = match op {
                "<" => Op::Lt,
                "<=" => Op::Le,
                "=" | "==" => Op::Eq,
                "!=" => Op::Ne,
                ">=" => Op::Ge,
                ">" => Op::Gt,
                _ => return Err(bad()),
            };
            let value = value.trim().parse().map_err(|_| bad())?;
            clauses.push((key, op, value));
        }
        if clauses.is_empty() {
            return Err(FilterError(s.to_string()));
        }
        Ok(Filter { clauses })
    }
}

impl Filter {
    pub fn matches(&self, r: &AnalysisReport) -> bool {
        if r.status == Status::Error {
            return true;
        }
        self.clauses.iter().all(|&(key, op, v)| {
            let x = match key {
                Key::P => r.p,
                Key::Pe => r.pe,
                Key::Rk2 => r.rk2,
            };
            let Some(x) = x else { return false };
            match op {
                Op::Lt => x < v,
                Op::Le => x <= v,
                Op::Eq => x == v,
                Op::Ne => x != v,
                Op::Ge => x >= v,
                Op::Gt => x > v,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse() {
        assert!("pe>=1".parse::<Filter>().is_ok());
        assert!("pe >= 1, p=2".parse::<Filter>().is_ok());
        assert!("rk2!=0".parse::<Filter>().is_ok());
        for bad in ["", "q>=1", "pe=>1", "pe>=x", "pe"] {
            assert!(bad.parse::<Filter>().is_err(), "{bad}");
        }
    }
}

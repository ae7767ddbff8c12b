//! Text format for discrete oracle instances.
//!
//! ```text
//! # two binary covariates
//! alphabets 2 2
//! costs 0.5 1.0
//! fp_cost 10
//! fn_cost 10
//! correct_cost 0
//! pmf 0 0 0 0.25
//! pmf 0 1 1 0.25
//! ...
//! ```
//!
//! Each `pmf` line gives covariate values, the label and the probability;
//! unlisted assignments have probability 0.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use adacos_core::oracle::DiscreteInstance;
use adacos_core::CostModel;

use crate::io::{IoError, Result};

fn numbers<T: std::str::FromStr>(fields: &[&str], line: usize) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| IoError::Format(format!("line {line}: cannot parse {f:?}")))
        })
        .collect()
}

fn scalar(fields: &[&str], line: usize) -> Result<f64> {
    match numbers::<f64>(fields, line)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(IoError::Format(format!("line {line}: expected one value"))),
    }
}

pub fn read_instance<R: Read>(reader: R) -> Result<DiscreteInstance> {
    let mut alphabets: Option<Vec<usize>> = None;
    let mut costs: Option<Vec<f64>> = None;
    let mut fp = None;
    let mut fnc = None;
    let mut correct = 0.0;
    let mut entries: Vec<(Vec<usize>, usize, f64, usize)> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IoError::Format(format!("line {line_no}: {e}")))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let rest = &fields[1..];
        match fields[0] {
            "alphabets" => alphabets = Some(numbers(rest, line_no)?),
            "costs" => costs = Some(numbers(rest, line_no)?),
            "fp_cost" => fp = Some(scalar(rest, line_no)?),
            "fn_cost" => fnc = Some(scalar(rest, line_no)?),
            "correct_cost" => correct = scalar(rest, line_no)?,
            "pmf" => {
                let (prob, assignment) = rest
                    .split_last()
                    .ok_or_else(|| IoError::Format(format!("line {line_no}: empty pmf entry")))?;
                let mut values: Vec<usize> = numbers(assignment, line_no)?;
                let y = values
                    .pop()
                    .ok_or_else(|| IoError::Format(format!("line {line_no}: pmf entry without label")))?;
                entries.push((values, y, scalar(&[prob], line_no)?, line_no));
            }
            other => {
                return Err(IoError::Format(format!("line {line_no}: unknown key {other:?}")));
            }
        }
    }
    let alphabets = alphabets.ok_or_else(|| IoError::Format("missing alphabets line".into()))?;
    let costs = costs.ok_or_else(|| IoError::Format("missing costs line".into()))?;
    let fp = fp.ok_or_else(|| IoError::Format("missing fp_cost".into()))?;
    let fnc = fnc.ok_or_else(|| IoError::Format("missing fn_cost".into()))?;
    if alphabets.is_empty() || alphabets.contains(&0) {
        return Err(IoError::Format("alphabets must be positive".into()));
    }
    let nx = alphabets
        .iter()
        .try_fold(1usize, |acc, &a| acc.checked_mul(a))
        .ok_or_else(|| IoError::Format("alphabets too large".into()))?;
    if nx > adacos_core::oracle::MAX_STATES {
        return Err(adacos_core::Error::StateSpaceTooLarge(nx).into());
    }
    let mut pmf = vec![0.0; 2 * nx];
    for (values, y, prob, line_no) in entries {
        if values.len() != alphabets.len()
            || values.iter().zip(&alphabets).any(|(&v, &a)| v >= a)
            || y > 1
        {
            return Err(IoError::Format(format!("line {line_no}: assignment out of range")));
        }
        let code = values.iter().zip(&alphabets).fold(0, |acc, (&v, &a)| acc * a + v);
        pmf[2 * code + y] += prob;
    }
    let costs = CostModel::new(costs, fp, Some(fnc), correct)?;
    Ok(DiscreteInstance::new(alphabets, pmf, costs)?)
}

pub fn load_instance(path: &Path) -> Result<DiscreteInstance> {
    let file = std::fs::File::open(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    read_instance(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let text = "alphabets 2\ncosts 1\nfp_cost 4\nfn_cost 4 # symmetric\n\npmf 0 0 0.5\npmf 1 1 0.5\n";
        let inst = read_instance(text.as_bytes()).unwrap();
        assert_eq!(inst.alphabets, vec![2]);
        assert_eq!(inst.pmf, vec![0.5, 0.0, 0.0, 0.5]);
        assert!(read_instance("alphabets 2\ncosts 1\nfp_cost 1\nfn_cost 1\npmf 2 0 1".as_bytes()).is_err());
        assert!(read_instance("alphabets 2\ncosts 1\nfp_cost 1\nfn_cost 1\npmf 0 0 0.3".as_bytes()).is_err());
        assert!(read_instance("alphabets 2\nfp_cost 1".as_bytes()).is_err());
    }
}

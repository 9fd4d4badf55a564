//! JSON file formats.
//!
//! Complex entries are `[re, im]` pairs; real entries may be written as bare
//! numbers. Subset indices in files are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, CMat, CVec, HermitianMatrix, StateList, C64};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> C64 {
        match self {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }
    }
}

impl From<C64> for Entry {
    fn from(z: C64) -> Self {
        Entry::Complex([z.re, z.im])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<Vec<Entry>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &HermitianMatrix) -> Self {
        let n = m.dim();
        let entries = (0..n).map(|i| (0..n).map(|j| m.get(i, j).into()).collect()).collect();
        MatrixFile { n, entries }
    }

    pub fn to_matrix(&self) -> Result<HermitianMatrix> {
        if self.entries.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: self.entries.len() });
        }
        for row in &self.entries {
            if row.len() != self.n {
                return Err(Error::Dimension { expected: self.n, found: row.len() });
            }
        }
        HermitianMatrix::new(CMat::from_fn(self.n, self.n, |i, j| self.entries[i][j].value()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatesFile {
    pub d: usize,
    pub states: Vec<Vec<Entry>>,
}

impl StatesFile {
    pub fn from_states(s: &StateList) -> Self {
        StatesFile {
            d: s.dim(),
            states: s.states().iter().map(vector_entries).collect(),
        }
    }

    pub fn to_states(&self) -> Result<StateList> {
        let vs = self.states.iter().map(|v| entries_vector(v)).collect();
        StateList::new(self.d, vs)
    }
}

pub fn vector_entries(v: &CVec) -> Vec<Entry> {
    v.iter().map(|&z| z.into()).collect()
}

pub fn entries_vector(v: &[Entry]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|e| e.value()))
}

pub fn matrix_from_json(text: &str) -> Result<HermitianMatrix> {
    serde_json::from_str::<MatrixFile>(text)?.to_matrix()
}

pub fn matrix_to_json(m: &HermitianMatrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("serializable")
}

pub fn states_from_json(text: &str) -> Result<StateList> {
    serde_json::from_str::<StatesFile>(text)?.to_states()
}

pub fn states_to_json(s: &StateList) -> String {
    serde_json::to_string(&StatesFile::from_states(s)).expect("serializable")
}

/// A JSON document that is either a matrix or a state list.
#[derive(Debug, Clone)]
pub enum Input {
    Matrix(HermitianMatrix),
    States(StateList),
}

pub fn input_from_json(text: &str) -> Result<Input> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("states").is_some() {
        Ok(Input::States(serde_json::from_value::<StatesFile>(value)?.to_states()?))
    } else {
        Ok(Input::Matrix(serde_json::from_value::<MatrixFile>(value)?.to_matrix()?))
    }
}

pub(crate) fn to_one_based(s: &[usize]) -> Vec<usize> {
    s.iter().map(|i| i + 1).collect()
}

pub(crate) fn to_zero_based(s: &[usize], n: usize) -> Result<Vec<usize>> {
    s.iter()
        .map(|&i| {
            if i == 0 || i > n {
                Err(Error::contract(format!("index {i} out of range 1..={n}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

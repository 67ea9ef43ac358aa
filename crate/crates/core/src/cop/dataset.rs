use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{euclidean_matrix, generate_instance, CopError, Domain, Instance, InstanceData};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::Scalar;

const MAGIC: &str = "motif-dataset v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetRole {
    Train,
    Test,
}

impl DatasetRole {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetRole::Train => "train",
            DatasetRole::Test => "test",
        }
    }
}

impl FromStr for DatasetRole {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(DatasetRole::Train),
            "test" => Ok(DatasetRole::Test),
            other => Err(DatasetError::Parse { line: 1, message: format!("unknown role `{other}`") }),
        }
    }
}

/// Stable name of a dataset: everything needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DatasetId(pub String);

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Cop(#[from] CopError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    pub domain: Domain,
    pub size: usize,
    pub seed: u64,
    pub role: DatasetRole,
    pub instances: Vec<Instance<S>>,
}

impl<S: Scalar> Dataset<S> {
    /// Instance `i` is generated from `derive_seed(seed, i)`.
    pub fn generate(domain: Domain, size: usize, count: usize, seed: u64, role: DatasetRole) -> Result<Self, CopError> {
        let instances = (0..count)
            .map(|i| generate_instance(domain, size, derive_seed(seed, i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { domain, size, seed, role, instances })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn id(&self) -> DatasetId {
        DatasetId(format!("{}:{}{}x{}@{}", self.role.as_str(), self.domain, self.size, self.len(), self.seed))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{MAGIC} domain={} size={} count={} seed={} role={}",
            self.domain,
            self.size,
            self.len(),
            self.seed,
            self.role.as_str()
        );
        for (i, inst) in self.instances.iter().enumerate() {
            let _ = writeln!(out, "instance {i} seed={}", inst.seed);
            write_payload(&mut out, &inst.data);
            out.push_str("end\n");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DatasetError> {
        let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
        let (no, header) = lines.next_line()?;
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| perr(no, format!("expected header starting with `{MAGIC}`")))?;
        let field = |key: &str| -> Result<&str, DatasetError> {
            rest.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| perr(no, format!("header lacks `{key}=`")))
        };
        let domain: Domain = field("domain")?.parse()?;
        let size = parse_num::<usize>(no, field("size")?)?;
        let count = parse_num::<usize>(no, field("count")?)?;
        let seed = parse_num::<u64>(no, field("seed")?)?;
        let role: DatasetRole = field("role")?.parse()?;

        let mut instances = Vec::with_capacity(count);
        for i in 0..count {
            let (no, line) = lines.next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let inst_seed = match toks.as_slice() {
                ["instance", idx, s] if parse_num::<usize>(no, idx)? == i => {
                    let v = s.strip_prefix("seed=").ok_or_else(|| perr(no, "expected `seed=`"))?;
                    parse_num::<u64>(no, v)?
                }
                _ => return Err(perr(no, format!("expected `instance {i} seed=...`"))),
            };
            let data = read_payload(domain, size, &mut lines)?;
            let (no, end) = lines.next_line()?;
            if end.trim() != "end" {
                return Err(perr(no, "expected `end`"));
            }
            instances.push(Instance { size, seed: inst_seed, data });
        }
        if let Some((no, line)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(perr(no + 1, format!("unexpected trailing content `{line}`")));
        }
        Ok(Self { domain, size, seed, role, instances })
    }
}

fn perr(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse { line, message: message.into() }
}

fn parse_num<T: FromStr>(line: usize, tok: &str) -> Result<T, DatasetError> {
    tok.parse().map_err(|_| perr(line, format!("cannot parse `{tok}`")))
}

fn parse_scalar<S: Scalar>(line: usize, tok: &str) -> Result<S, DatasetError> {
    S::from_str_radix(tok, 10).map_err(|_| perr(line, format!("cannot parse number `{tok}`")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), DatasetError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(perr(self.last + 1, "unexpected end of file")),
        }
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn vector<S: Scalar>(&mut self, key: &str, len: usize) -> Result<Vec<S>, DatasetError> {
        let (no, line) = self.next_line()?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(key) {
            return Err(perr(no, format!("expected `{key}`")));
        }
        let v = toks.map(|t| parse_scalar(no, t)).collect::<Result<Vec<S>, _>>()?;
        if v.len() != len {
            return Err(perr(no, format!("`{key}` has {} values, expected {len}", v.len())));
        }
        Ok(v)
    }

    fn scalar<S: Scalar>(&mut self, key: &str) -> Result<S, DatasetError> {
        Ok(self.vector(key, 1)?[0])
    }

    fn coords<S: Scalar>(&mut self, n: usize) -> Result<Vec<[S; 2]>, DatasetError> {
        let (no, line) = self.next_line()?;
        if line.split_whitespace().collect::<Vec<_>>() != ["coords", &n.to_string()] {
            return Err(perr(no, format!("expected `coords {n}`")));
        }
        (0..n)
            .map(|_| {
                let (no, line) = self.next_line()?;
                let v = line.split_whitespace().map(|t| parse_scalar(no, t)).collect::<Result<Vec<S>, _>>()?;
                match v.as_slice() {
                    [x, y] => Ok([*x, *y]),
                    _ => Err(perr(no, "expected two coordinates")),
                }
            })
            .collect()
    }

    fn matrix<S: Scalar>(&mut self, key: &str) -> Result<Matrix<S>, DatasetError> {
        let (no, line) = self.next_line()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (rows, cols) = match toks.as_slice() {
            [k, r, c] if *k == key => (parse_num::<usize>(no, r)?, parse_num::<usize>(no, c)?),
            _ => return Err(perr(no, format!("expected `{key} <rows> <cols>`"))),
        };
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            let (no, line) = self.next_line()?;
            let row = line.split_whitespace().map(|t| parse_scalar(no, t)).collect::<Result<Vec<S>, _>>()?;
            if row.len() != cols {
                return Err(perr(no, format!("row has {} values, expected {cols}", row.len())));
            }
            data.push(row);
        }
        Matrix::from_rows(data).ok_or_else(|| perr(no, "ragged matrix"))
    }
}

fn write_values<S: Scalar>(out: &mut String, key: &str, values: &[S]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn write_coords<S: Scalar>(out: &mut String, coords: &[[S; 2]]) {
    let _ = writeln!(out, "coords {}", coords.len());
    for [x, y] in coords {
        let _ = writeln!(out, "{x} {y}");
    }
}

fn write_payload<S: Scalar>(out: &mut String, data: &InstanceData<S>) {
    match data {
        InstanceData::Tsp { coords, .. } => write_coords(out, coords),
        InstanceData::Cvrp { coords, demands, capacity, .. } => {
            write_coords(out, coords);
            write_values(out, "demands", demands);
            write_values(out, "capacity", &[*capacity]);
        }
        InstanceData::Mkp { prizes, weights, capacities } => {
            write_values(out, "prizes", prizes);
            let _ = writeln!(out, "weights {} {}", weights.rows(), weights.cols());
            for i in 0..weights.rows() {
                let row = weights.row(i).iter().map(|w| w.to_string()).collect::<Vec<_>>();
                let _ = writeln!(out, "{}", row.join(" "));
            }
            write_values(out, "capacities", capacities);
        }
        InstanceData::Op { coords, prizes, budget, .. } => {
            write_coords(out, coords);
            write_values(out, "prizes", prizes);
            write_values(out, "budget", &[*budget]);
        }
        InstanceData::Bpp { sizes, capacity } => {
            write_values(out, "sizes", sizes);
            write_values(out, "capacity", &[*capacity]);
        }
    }
}

fn read_payload<S: Scalar>(domain: Domain, size: usize, lines: &mut Lines<'_>) -> Result<InstanceData<S>, DatasetError> {
    Ok(match domain {
        Domain::Tsp => {
            let coords = lines.coords(size)?;
            InstanceData::Tsp { distances: euclidean_matrix(&coords), coords }
        }
        Domain::Cvrp => {
            let coords = lines.coords(size + 1)?;
            let demands = lines.vector("demands", size + 1)?;
            let capacity = lines.scalar("capacity")?;
            InstanceData::Cvrp { distances: euclidean_matrix(&coords), coords, demands, capacity }
        }
        Domain::Mkp => {
            let prizes = lines.vector("prizes", size)?;
            let weights: Matrix<S> = lines.matrix("weights")?;
            if weights.cols() != size {
                return Err(perr(lines.last, "weight matrix column count differs from size"));
            }
            let capacities = lines.vector("capacities", weights.rows())?;
            InstanceData::Mkp { prizes, weights, capacities }
        }
        Domain::Op => {
            let coords = lines.coords(size)?;
            let prizes = lines.vector("prizes", size)?;
            let budget = lines.scalar("budget")?;
            InstanceData::Op { distances: euclidean_matrix(&coords), coords, prizes, budget }
        }
        Domain::Bpp => {
            let sizes = lines.vector("sizes", size)?;
            let capacity = lines.scalar("capacity")?;
            InstanceData::Bpp { sizes, capacity }
        }
    })
}

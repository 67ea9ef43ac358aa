use rand::Rng;

use super::{euclidean_matrix, CopError, Domain, Instance, InstanceData};
use crate::matrix::Matrix;
use crate::rng::stream;
use crate::Scalar;

/// Knapsack count for generated MKP instances.
pub const MKP_KNAPSACKS: usize = 5;

const CVRP_CAPACITY: f64 = 50.0;
const BPP_CAPACITY: f64 = 150.0;
const OP_SCHEDULE: [(f64, f64); 5] = [(50.0, 3.0), (100.0, 4.0), (200.0, 5.0), (300.0, 6.0), (500.0, 7.0)];

/// Travel budget for an OP instance with `size` nodes. Sizes between the
/// tabulated points interpolate linearly; sizes outside clamp to the ends.
pub fn op_budget(size: usize) -> f64 {
    let n = size as f64;
    let (first, last) = (OP_SCHEDULE[0], OP_SCHEDULE[OP_SCHEDULE.len() - 1]);
    if n <= first.0 {
        return first.1;
    }
    if n >= last.0 {
        return last.1;
    }
    for w in OP_SCHEDULE.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if n <= x1 {
            return y0 + (y1 - y0) * (n - x0) / (x1 - x0);
        }
    }
    last.1
}

fn unit_coords<S: Scalar>(rng: &mut impl Rng, n: usize) -> Vec<[S; 2]> {
    (0..n).map(|_| [S::lit(rng.random::<f64>()), S::lit(rng.random::<f64>())]).collect()
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Samples one instance. For CVRP `size` counts customers (the depot is
/// extra); for every other domain it counts cities, nodes or items.
pub fn generate_instance<S: Scalar>(domain: Domain, size: usize, seed: u64) -> Result<Instance<S>, CopError> {
    if size < 2 {
        return Err(CopError::SizeTooSmall(size));
    }
    let mut rng = stream(seed);
    let data = match domain {
        Domain::Tsp => {
            let coords = unit_coords(&mut rng, size);
            let distances = euclidean_matrix(&coords);
            InstanceData::Tsp { coords, distances }
        }
        Domain::Cvrp => {
            let mut coords = vec![[S::lit(0.5), S::lit(0.5)]];
            coords.extend(unit_coords::<S>(&mut rng, size));
            let mut demands = vec![S::zero()];
            demands.extend((0..size).map(|_| S::lit(uniform(&mut rng, 1.0, 10.0))));
            let distances = euclidean_matrix(&coords);
            InstanceData::Cvrp { coords, distances, demands, capacity: S::lit(CVRP_CAPACITY) }
        }
        Domain::Mkp => {
            let prizes: Vec<S> = (0..size).map(|_| S::lit(rng.random::<f64>())).collect();
            let weights = Matrix::from_fn(MKP_KNAPSACKS, size, |_, _| S::lit(rng.random::<f64>()));
            let capacities = (0..MKP_KNAPSACKS)
                .map(|i| {
                    let row = weights.row(i);
                    let max = row.iter().fold(S::zero(), |a, &b| a.max(b)).as_f64();
                    let sum: f64 = row.iter().map(|w| w.as_f64()).sum();
                    S::lit(uniform(&mut rng, max, sum))
                })
                .collect();
            InstanceData::Mkp { prizes, weights, capacities }
        }
        Domain::Op => {
            let coords = unit_coords::<S>(&mut rng, size);
            let distances = euclidean_matrix(&coords);
            let far = (0..size).map(|j| distances.get(0, j)).fold(S::zero(), |a, b| a.max(b));
            let prizes = (0..size)
                .map(|i| {
                    let ratio = if far > S::zero() { distances.get(0, i) / far } else { S::zero() };
                    (S::one() + (S::lit(99.0) * ratio).floor()) / S::lit(100.0)
                })
                .collect();
            InstanceData::Op { coords, distances, prizes, budget: S::lit(op_budget(size)) }
        }
        Domain::Bpp => {
            let sizes = (0..size).map(|_| S::lit(uniform(&mut rng, 20.0, 100.0))).collect();
            InstanceData::Bpp { sizes, capacity: S::lit(BPP_CAPACITY) }
        }
    };
    Ok(Instance { size, seed, data })
}

use super::DsrError;
use crate::{Eval, Library, Traversal};

/// Training points, one value per library variable in library order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    y_std: f64,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Dataset, DsrError> {
        assert_eq!(points.len(), y.len(), "one target per point");
        if y.is_empty() {
            return Err(DsrError::DegenerateTarget);
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let y_std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(y_std > 0.0) {
            return Err(DsrError::DegenerateTarget);
        }
        Ok(Dataset { points, y, y_std })
    }

    /// Population standard deviation of the targets.
    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardOutcome {
    pub reward: f64,
    /// Some point evaluated to a domain error or a non-finite value.
    pub invalid: bool,
}

/// `1 / (1 + NRMSE)` with `NRMSE = RMSE / std(y)`; zero for invalid
/// expressions. Always in `[0, 1]`, and `1` exactly when every prediction is
/// exact.
pub fn reward(t: &Traversal, lib: &Library, data: &Dataset) -> RewardOutcome {
    let mut sq = 0.0;
    for (x, &y) in data.points.iter().zip(&data.y) {
        match t.evaluate(lib, x) {
            Ok(Eval::Value(v)) => sq += (v - y) * (v - y),
            _ => return RewardOutcome { reward: 0.0, invalid: true },
        }
    }
    let nrmse = (sq / data.len() as f64).sqrt() / data.y_std;
    if !nrmse.is_finite() {
        return RewardOutcome { reward: 0.0, invalid: true };
    }
    RewardOutcome { reward: 1.0 / (1.0 + nrmse), invalid: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Token;

    fn setup() -> (Library, Dataset) {
        let lib = Library::from_names("t", &["add", "mul", "log", "x"]).unwrap();
        let xs = [-0.9, -0.2, 0.3, 0.8];
        let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let y = xs.iter().map(|&x| x * x + x).collect();
        (lib, Dataset::new(points, y).unwrap())
    }

    #[test]
    fn exact_target_scores_one() {
        let (lib, data) = setup();
        let t = Traversal::from_names(&["add", "mul", "x", "x", "x"], &lib).unwrap();
        assert_eq!(reward(&t, &lib, &data), RewardOutcome { reward: 1.0, invalid: false });
    }

    #[test]
    fn invalid_scores_zero() {
        let (lib, data) = setup();
        let t = Traversal::from_names(&["log", "x"], &lib).unwrap();
        assert_eq!(reward(&t, &lib, &data), RewardOutcome { reward: 0.0, invalid: true });
    }

    #[test]
    fn mean_predictor_scores_half() {
        // constant prediction at the mean has RMSE equal to the population std
        let lib = Library::new("t", vec![Token::variable("x"), Token::constant("0.25")]).unwrap();
        let points = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let data = Dataset::new(points, vec![-1.0, 0.5, 1.0, 0.5]).unwrap();
        let t = Traversal(vec![1]);
        let r = reward(&t, &lib, &data).reward;
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_target_is_degenerate() {
        assert_eq!(Dataset::new(vec![vec![0.0], vec![1.0]], vec![2.0, 2.0]), Err(DsrError::DegenerateTarget));
    }
}

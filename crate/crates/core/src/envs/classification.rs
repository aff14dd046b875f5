//! Classification datasets as bandits: one arm per class, reward 1 for the true class.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{check_arm, check_round, EnvError, Environment, Round};
use crate::domain::SeedSpec;

pub const DEFAULT_HORIZON_CAP: usize = 10_000;

/// Standardised features and integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationData {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Original label strings, indexed by label id.
    pub classes: Vec<String>,
}

impl ClassificationData {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn from_reader<R: Read>(
        reader: R,
        label: &str,
        categorical: &[String],
    ) -> Result<Self, EnvError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| EnvError::Schema(format!("missing column {name:?}")))
        };
        let label_idx = find(label)?;
        for c in categorical {
            find(c)?;
        }

        let mut raw: Vec<Vec<String>> = Vec::new();
        for rec in rdr.records() {
            raw.push(rec?.iter().map(|s| s.trim().to_owned()).collect());
        }
        if raw.is_empty() {
            return Err(EnvError::Schema("no data rows".into()));
        }

        let mut classes: Vec<String> = Vec::new();
        let mut class_ids: HashMap<String, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|row| {
                let v = &row[label_idx];
                *class_ids.entry(v.clone()).or_insert_with(|| {
                    classes.push(v.clone());
                    classes.len() - 1
                })
            })
            .collect();

        let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
        for (j, name) in header.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            if categorical.contains(name) {
                let mut levels: Vec<String> = Vec::new();
                for row in &raw {
                    if !levels.contains(&row[j]) {
                        levels.push(row[j].clone());
                    }
                }
                for level in &levels {
                    let col = raw
                        .iter()
                        .map(|row| if &row[j] == level { 1.0 } else { 0.0 })
                        .collect();
                    columns.push((format!("{name}={level}"), col));
                }
            } else {
                let col = raw
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row[j]
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| EnvError::Parse {
                                row: i + 1,
                                column: name.clone(),
                                value: row[j].clone(),
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                columns.push((name.clone(), col));
            }
        }

        for (_, col) in columns.iter_mut() {
            standardize(col);
        }
        let n = raw.len();
        let features = (0..n)
            .map(|i| columns.iter().map(|(_, c)| c[i]).collect())
            .collect();
        Ok(Self {
            feature_names: columns.into_iter().map(|(n, _)| n).collect(),
            features,
            labels,
            classes,
        })
    }
}

/// In-place z-scoring with population statistics; constant columns get sd 1.
fn standardize(col: &mut [f64]) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    for v in col.iter_mut() {
        *v = (*v - mean) / sd;
    }
}

/// Reads a CSV file with a header row.
///
/// Numeric columns are standardised over the full file, declared categorical
/// columns are one-hot encoded (levels in first-appearance order) and labels
/// are numbered in first-appearance order. Row order is preserved.
pub fn ingest_csv(
    path: &Path,
    label: &str,
    categorical: &[String],
) -> Result<ClassificationData, EnvError> {
    let file = std::fs::File::open(path)
        .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
    ClassificationData::from_reader(file, label, categorical)
}

#[derive(Debug, Clone)]
pub struct ClassificationEnv {
    name: String,
    data: Arc<ClassificationData>,
    order: Vec<usize>,
}

impl ClassificationEnv {
    /// Streams rows in file order, capped at `horizon_cap` rounds.
    pub fn new(name: &str, data: Arc<ClassificationData>, horizon_cap: usize) -> Self {
        let horizon = data.rows().min(horizon_cap);
        Self {
            name: name.to_owned(),
            order: (0..horizon).collect(),
            data,
        }
    }

    /// Streams a seeded permutation of the rows, capped at `horizon_cap` rounds.
    pub fn shuffled(
        name: &str,
        data: Arc<ClassificationData>,
        horizon_cap: usize,
        seed: &SeedSpec,
    ) -> Self {
        let mut order: Vec<usize> = (0..data.rows()).collect();
        order.shuffle(&mut seed.derive("shuffle", 0).rng());
        order.truncate(data.rows().min(horizon_cap));
        Self {
            name: name.to_owned(),
            data,
            order,
        }
    }

    pub fn horizon(&self) -> usize {
        self.order.len()
    }

    pub fn label(&self, t: usize) -> Result<usize, EnvError> {
        check_round(t, Some(self.horizon()))?;
        Ok(self.data.labels[self.order[t - 1]])
    }
}

impl Environment for ClassificationEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_arms(&self) -> usize {
        self.data.num_classes()
    }

    fn context_dim(&self) -> usize {
        self.data.feature_names.len()
    }

    fn horizon_limit(&self) -> Option<usize> {
        Some(self.horizon())
    }

    fn observe(&self, t: usize) -> Result<Round, EnvError> {
        let label = self.label(t)?;
        let mut means = vec![0.0; self.num_arms()];
        means[label] = 1.0;
        Ok(Round {
            context: self.data.features[self.order[t - 1]].clone(),
            means,
        })
    }

    fn reward(&self, t: usize, arm: usize) -> Result<f64, EnvError> {
        check_arm(arm, self.num_arms())?;
        Ok(if self.label(t)? == arm { 1.0 } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, cats: &[&str]) -> Result<ClassificationData, EnvError> {
        let cats: Vec<String> = cats.iter().map(|s| s.to_string()).collect();
        ClassificationData::from_reader(text.as_bytes(), "y", &cats)
    }

    #[test]
    fn two_rows_two_classes() {
        let d = parse("x,y\n1,a\n2,b\n", &[]).unwrap();
        assert_eq!(d.num_classes(), 2);
        assert_eq!(d.labels, vec![0, 1]);
        assert_eq!(d.classes, vec!["a", "b"]);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let d = parse("c,x,y\n3,1,a\n3,5,b\n3,2,a\n", &[]).unwrap();
        assert!(d.features.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn standardized_columns_have_unit_moments() {
        let mut text = String::from("u,v,y\n");
        for i in 0..37 {
            text.push_str(&format!("{},{},{}\n", i * i, (i as f64).sin() * 3.0 + 7.0, i % 3));
        }
        let d = parse(&text, &[]).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = d.features.iter().map(|r| r[j]).collect();
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
        assert_eq!(d.labels[..4], [0, 1, 2, 0]);
    }

    #[test]
    fn categorical_one_hot_in_appearance_order() {
        let d = parse("k,y\nred,a\nblue,b\nred,a\n", &["k"]).unwrap();
        assert_eq!(d.feature_names, vec!["k=red", "k=blue"]);
        // one-hot columns are standardised like any other
        assert!(d.features[0][0] > 0.0 && d.features[1][0] < 0.0);
        assert!(d.features[1][1] > 0.0);
    }

    #[test]
    fn schema_and_parse_errors() {
        assert!(matches!(parse("x,z\n1,2\n", &[]), Err(EnvError::Schema(_))));
        assert!(matches!(parse("x,y\n1,a\n", &["k"]), Err(EnvError::Schema(_))));
        match parse("x,y\n1,a\noops,b\n", &[]) {
            Err(EnvError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rewards_and_horizon() {
        let d = Arc::new(parse("x,y\n1,a\n2,b\n3,c\n", &[]).unwrap());
        let env = ClassificationEnv::new("toy", d.clone(), 10_000);
        assert_eq!(env.horizon_limit(), Some(3));
        assert_eq!(env.reward(3, 2).unwrap(), 1.0);
        assert_eq!(env.reward(3, 0).unwrap(), 0.0);
        assert!(matches!(
            env.reward(4, 0),
            Err(EnvError::HorizonExhausted { .. })
        ));
        let oracle: f64 = (1..=3).map(|t| env.reward(t, env.label(t).unwrap()).unwrap()).sum();
        assert_eq!(oracle, 3.0);
        let capped = ClassificationEnv::new("toy", d, 2);
        assert_eq!(capped.horizon(), 2);
    }

    #[test]
    fn shuffle_is_a_seeded_permutation() {
        let mut text = String::from("x,y\n");
        for i in 0..50 {
            text.push_str(&format!("{i},{}\n", i % 4));
        }
        let d = Arc::new(parse(&text, &[]).unwrap());
        let seed = SeedSpec::root(9);
        let a = ClassificationEnv::shuffled("s", d.clone(), 10_000, &seed);
        let b = ClassificationEnv::shuffled("s", d, 10_000, &seed);
        let la: Vec<usize> = (1..=50).map(|t| a.label(t).unwrap()).collect();
        let lb: Vec<usize> = (1..=50).map(|t| b.label(t).unwrap()).collect();
        assert_eq!(la, lb);
        let mut sorted = a.order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(a.order, sorted);
    }
}

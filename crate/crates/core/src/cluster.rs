//! Reduction of a year of hourly data to representative weeks: feature
//! extraction from hourly CSV records, z-score normalization, Ward-linkage
//! agglomerative clustering, and medoid selection. Deterministic throughout.

use serde::{Deserialize, Serialize};

pub const HOURS_PER_WEEK: usize = 168;

/// One hourly observation for one region.
#[derive(Debug, Clone, Deserialize)]
pub struct HourlyRecord {
    pub timestamp: String,
    pub region: String,
    pub demand_mw: f64,
    pub wind_availability: f64,
    pub solar_availability: f64,
}

/// One candidate week as a flat feature vector (per region: demand series,
/// wind series, solar series).
#[derive(Debug, Clone, PartialEq)]
pub struct WeekSeries {
    pub label: String,
    pub features: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("no complete weeks in the input")]
    NoWeeks,
    #[error("region {region} has {got} rows, expected {want}")]
    RaggedRegions {
        region: String,
        got: usize,
        want: usize,
    },
    #[error("requested {k} clusters from {weeks} weeks")]
    TooFewWeeks { k: usize, weeks: usize },
    #[error("requested zero clusters")]
    ZeroClusters,
}

/// Parse hourly records and fold them into per-week feature vectors. Rows
/// must be hour-ordered within each region; a trailing partial week is
/// dropped.
pub fn weeks_from_records(records: &[HourlyRecord]) -> Result<Vec<WeekSeries>, ClusterError> {
    let mut regions: Vec<&str> = Vec::new();
    for r in records {
        if !regions.contains(&r.region.as_str()) {
            regions.push(&r.region);
        }
    }
    if regions.is_empty() {
        return Err(ClusterError::NoWeeks);
    }
    let per_region: Vec<Vec<&HourlyRecord>> = regions
        .iter()
        .map(|&reg| records.iter().filter(|r| r.region == reg).collect())
        .collect();
    let hours = per_region[0].len();
    for (reg, rows) in regions.iter().zip(&per_region) {
        if rows.len() != hours {
            return Err(ClusterError::RaggedRegions {
                region: reg.to_string(),
                got: rows.len(),
                want: hours,
            });
        }
    }
    let num_weeks = hours / HOURS_PER_WEEK;
    if num_weeks == 0 {
        return Err(ClusterError::NoWeeks);
    }
    let mut weeks = Vec::with_capacity(num_weeks);
    for wk in 0..num_weeks {
        let start = wk * HOURS_PER_WEEK;
        let mut features =
            Vec::with_capacity(regions.len() * 3 * HOURS_PER_WEEK);
        for rows in &per_region {
            for r in &rows[start..start + HOURS_PER_WEEK] {
                features.push(r.demand_mw);
            }
            for r in &rows[start..start + HOURS_PER_WEEK] {
                features.push(r.wind_availability);
            }
            for r in &rows[start..start + HOURS_PER_WEEK] {
                features.push(r.solar_availability);
            }
        }
        weeks.push(WeekSeries {
            label: per_region[0][start].timestamp.clone(),
            features,
        });
    }
    Ok(weeks)
}

/// Read hourly CSV (`timestamp,region,demand_mw,wind_availability,
/// solar_availability`) into candidate weeks.
pub fn read_weeks_csv<R: std::io::Read>(reader: R) -> Result<Vec<WeekSeries>, ClusterError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for row in rdr.deserialize::<HourlyRecord>() {
        records.push(row?);
    }
    weeks_from_records(&records)
}

/// Z-score each feature dimension across weeks; constant dimensions map
/// to zero. Returns the normalized copies.
pub fn normalize_features(weeks: &[WeekSeries]) -> Vec<Vec<f64>> {
    if weeks.is_empty() {
        return Vec::new();
    }
    let dim = weeks[0].features.len();
    let n = weeks.len() as f64;
    let mut mean = vec![0.0; dim];
    for w in weeks {
        for (j, &v) in w.features.iter().enumerate() {
            mean[j] += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    for w in weeks {
        for (j, &v) in w.features.iter().enumerate() {
            std[j] += (v - mean[j]).powi(2);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
    }
    weeks
        .iter()
        .map(|w| {
            w.features
                .iter()
                .enumerate()
                .map(|(j, &v)| if std[j] > 1e-12 { (v - mean[j]) / std[j] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Result of clustering candidate weeks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeekClustering {
    /// assignments[week] = cluster id in [0, k)
    pub assignments: Vec<usize>,
    /// Representative (medoid) week index per cluster.
    pub medoids: Vec<usize>,
    /// Cluster weights, proportional to member counts; sum to one.
    pub weights: Vec<f64>,
    /// Member counts per cluster.
    pub sizes: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ward-linkage agglomerative clustering down to `k` clusters, with
/// deterministic smallest-index tie-breaking, followed by medoid selection.
pub fn cluster_weeks(weeks: &[WeekSeries], k: usize) -> Result<WeekClustering, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let n = weeks.len();
    if n < k {
        return Err(ClusterError::TooFewWeeks { k, weeks: n });
    }
    let feats = normalize_features(weeks);

    // squared-distance matrix between active clusters (Ward merge cost is
    // maintained through the Lance-Williams update)
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(&feats[i], &feats[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<f64> = vec![1.0; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    let mut remaining = n;
    while remaining > k {
        // find the cheapest merge; ties resolved by the smaller (i, j)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let cost = dist[i][j];
                let take = match best {
                    None => true,
                    Some((bc, _, _)) => cost < bc,
                };
                if take {
                    best = Some((cost, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active clusters");
        // Lance-Williams update for Ward linkage: i absorbs j
        let (ni, nj) = (size[i], size[j]);
        for l in 0..n {
            if !active[l] || l == i || l == j {
                continue;
            }
            let nl = size[l];
            let d = ((ni + nl) * dist[i][l] + (nj + nl) * dist[j][l] - nl * dist[i][j])
                / (ni + nj + nl);
            dist[i][l] = d;
            dist[l][i] = d;
        }
        size[i] += size[j];
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        active[j] = false;
        remaining -= 1;
    }

    // stable cluster ids: order by smallest member index
    let mut clusters: Vec<Vec<usize>> = (0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut m = members[i].clone();
            m.sort_unstable();
            m
        })
        .collect();
    clusters.sort_by_key(|m| m[0]);

    let mut assignments = vec![0usize; n];
    let mut medoids = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    let mut sizes = Vec::with_capacity(k);
    for (cid, m) in clusters.iter().enumerate() {
        for &w in m {
            assignments[w] = cid;
        }
        // medoid: member minimizing total squared distance to the others
        let medoid = m
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da: f64 = m.iter().map(|&o| sq_dist(&feats[a], &feats[o])).sum();
                let db: f64 = m.iter().map(|&o| sq_dist(&feats[b], &feats[o])).sum();
                da.partial_cmp(&db)
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .expect("cluster is nonempty");
        medoids.push(medoid);
        weights.push(m.len() as f64 / n as f64);
        sizes.push(m.len());
    }
    Ok(WeekClustering {
        assignments,
        medoids,
        weights,
        sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn week(label: &str, f: &[f64]) -> WeekSeries {
        WeekSeries {
            label: label.into(),
            features: f.to_vec(),
        }
    }

    #[test]
    fn two_obvious_groups() {
        let weeks = vec![
            week("a", &[0.0, 0.1]),
            week("b", &[0.1, 0.0]),
            week("c", &[5.0, 5.1]),
            week("d", &[5.1, 5.0]),
            week("e", &[0.05, 0.05]),
        ];
        let c = cluster_weeks(&weeks, 2).unwrap();
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_eq!(c.assignments[0], c.assignments[4]);
        assert_eq!(c.assignments[2], c.assignments[3]);
        assert_ne!(c.assignments[0], c.assignments[2]);
        assert_eq!(c.sizes, vec![3, 2]);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(c.medoids[0], 4); // central member of the first group
    }

    #[test]
    fn weights_sum_to_one_and_are_proportional() {
        let weeks: Vec<WeekSeries> = (0..10)
            .map(|i| week(&format!("w{i}"), &[if i < 7 { 0.0 } else { 10.0 }, i as f64 * 1e-3]))
            .collect();
        let c = cluster_weeks(&weeks, 2).unwrap();
        assert_eq!(c.sizes, vec![7, 3]);
        assert!((c.weights[0] - 0.7).abs() < 1e-12);
        assert!((c.weights[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_is_identity() {
        let weeks = vec![week("a", &[0.0]), week("b", &[1.0]), week("c", &[2.0])];
        let c = cluster_weeks(&weeks, 3).unwrap();
        assert_eq!(c.assignments, vec![0, 1, 2]);
        assert_eq!(c.medoids, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_k() {
        let weeks = vec![week("a", &[0.0])];
        assert!(matches!(
            cluster_weeks(&weeks, 0),
            Err(ClusterError::ZeroClusters)
        ));
        assert!(matches!(
            cluster_weeks(&weeks, 2),
            Err(ClusterError::TooFewWeeks { .. })
        ));
    }

    #[test]
    fn csv_roundtrip_builds_weeks() {
        let mut csv = String::from("timestamp,region,demand_mw,wind_availability,solar_availability\n");
        for h in 0..(2 * HOURS_PER_WEEK) {
            csv.push_str(&format!("2015-01-01T{h:04},north,{},0.3,0.1\n", 100.0 + h as f64));
        }
        let weeks = read_weeks_csv(csv.as_bytes()).unwrap();
        assert_eq!(weeks.len(), 2);
        assert_eq!(weeks[0].features.len(), 3 * HOURS_PER_WEEK);
        assert_eq!(weeks[0].features[0], 100.0);
        assert_eq!(weeks[1].features[0], 100.0 + HOURS_PER_WEEK as f64);
    }

    #[test]
    fn determinism_under_ties() {
        // four equidistant points: merges must pick smallest indices first
        let weeks = vec![
            week("a", &[0.0, 0.0]),
            week("b", &[1.0, 0.0]),
            week("c", &[0.0, 1.0]),
            week("d", &[1.0, 1.0]),
        ];
        let c1 = cluster_weeks(&weeks, 2).unwrap();
        let c2 = cluster_weeks(&weeks, 2).unwrap();
        assert_eq!(c1.assignments, c2.assignments);
        assert_eq!(c1.medoids, c2.medoids);
    }
}

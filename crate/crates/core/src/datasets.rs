//! Converters from public tabular datasets to hypergraphs.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

const ZOO_ATTRIBUTES: usize = 16;

/// Builds a hypergraph from the UCI zoo table (`name,16 attributes,type`).
///
/// Every (attribute, value) pair shared by at least two animals becomes a
/// hyperedge. Features are the 16 attribute values, with the leg count
/// divided by 8 so all columns lie in `[0, 1]`. Labels are `type − 1`.
pub fn zoo_from_uci(text: &str) -> Result<Hypergraph> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ZOO_ATTRIBUTES + 2 {
            return Err(Error::Malformed(format!(
                "zoo line {}: expected {} fields, got {}",
                lineno + 1,
                ZOO_ATTRIBUTES + 2,
                fields.len()
            )));
        }
        let parse = |tok: &str| {
            tok.parse::<u32>()
                .map_err(|_| Error::Malformed(format!("zoo line {}: bad value {tok:?}", lineno + 1)))
        };
        let attrs = fields[1..=ZOO_ATTRIBUTES].iter().map(|t| parse(t)).collect::<Result<Vec<_>>>()?;
        let class = parse(fields[ZOO_ATTRIBUTES + 1])?;
        if class == 0 {
            return Err(Error::Malformed(format!("zoo line {}: class ids start at 1", lineno + 1)));
        }
        rows.push(attrs);
        labels.push(class as usize - 1);
    }

    let n = rows.len();
    let mut groups: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for (i, attrs) in rows.iter().enumerate() {
        for (a, &v) in attrs.iter().enumerate() {
            groups.entry((a, v)).or_default().push(i);
        }
    }
    let hyperedges: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() >= 2).collect();

    // Column 12 (0-based) is the leg count.
    let features = Array2::from_shape_fn((n, ZOO_ATTRIBUTES), |(i, a)| {
        let v = f64::from(rows[i][a]);
        if a == 12 {
            v / 8.0
        } else {
            v
        }
    });
    Hypergraph::new(n, hyperedges, Some(features), Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
aardvark,1,0,0,1,0,0,1,1,1,1,0,0,4,0,0,1,1
antelope,1,0,0,1,0,0,0,1,1,1,0,0,4,1,0,1,1
bass,0,0,1,0,0,1,1,1,1,0,0,1,0,1,0,0,4
";

    #[test]
    fn converts_sample_rows() {
        let hg = zoo_from_uci(SAMPLE).unwrap();
        assert_eq!(hg.num_nodes(), 3);
        assert_eq!(hg.labels().unwrap(), &[0, 0, 3]);
        assert_eq!(hg.feature_dim(), Some(16));
        assert_eq!(hg.features().unwrap()[[0, 12]], 0.5);
        // Every hyperedge groups animals sharing one attribute value.
        assert!(hg.hyperedges().iter().all(|e| e.len() >= 2));
        assert!(hg.hyperedges().contains(&vec![0, 1, 2]));
        assert!(hg.hyperedges().contains(&vec![0, 1]));
    }

    #[test]
    fn rejects_short_rows() {
        assert!(zoo_from_uci("cat,1,0\n").is_err());
    }
}

//! JSON measure schema.
//!
//! Discrete: `{"dim": d, "atoms": [{"x": [..], "w": w}, ..]}`.
//! Density: `{"density1d": {"breaks": [..], "values": [..]}}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{discretize, DiscreteMeasure, PiecewiseConstantDensity};

#[derive(Debug, Serialize, Deserialize)]
struct AtomDoc {
    x: Vec<f64>,
    w: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DiscreteDoc {
    dim: usize,
    atoms: Vec<AtomDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityBody {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityDoc {
    density1d: DensityBody,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AnyDoc {
    Discrete(DiscreteDoc),
    Density(DensityDoc),
}

/// A parsed measure file.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureInput {
    Discrete(DiscreteMeasure),
    Density(PiecewiseConstantDensity),
}

impl MeasureInput {
    /// Densities are discretized at `cells_per_unit`; discrete input passes through.
    pub fn into_discrete(self, cells_per_unit: u32) -> Result<DiscreteMeasure> {
        match self {
            MeasureInput::Discrete(m) => Ok(m),
            MeasureInput::Density(f) => discretize(&f, cells_per_unit),
        }
    }
}

pub fn parse_measure(text: &str) -> Result<MeasureInput> {
    match serde_json::from_str::<AnyDoc>(text) {
        Ok(AnyDoc::Discrete(d)) => {
            let (points, weights) = d.atoms.into_iter().map(|a| (a.x, a.w)).unzip();
            Ok(MeasureInput::Discrete(DiscreteMeasure::new(d.dim, points, weights)?))
        }
        Ok(AnyDoc::Density(d)) => Ok(MeasureInput::Density(PiecewiseConstantDensity::new(
            d.density1d.breaks,
            d.density1d.values,
        )?)),
        Err(e) => {
            // Report the syntax error when the text is not JSON at all.
            serde_json::from_str::<serde_json::Value>(text)?;
            Err(Error::InvalidMeasure(format!("unrecognized measure document: {e}")))
        }
    }
}

pub fn discrete_to_json(mu: &DiscreteMeasure) -> serde_json::Value {
    let doc = DiscreteDoc {
        dim: mu.dim(),
        atoms: mu
            .atoms()
            .map(|(x, w)| AtomDoc { x: x.to_vec(), w })
            .collect(),
    };
    serde_json::to_value(doc).expect("finite values serialize")
}

pub fn density_to_json(f: &PiecewiseConstantDensity) -> serde_json::Value {
    let doc = DensityDoc {
        density1d: DensityBody {
            breaks: f.breaks().to_vec(),
            values: f.values().to_vec(),
        },
    };
    serde_json::to_value(doc).expect("finite values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_round_trip() {
        let mu = DiscreteMeasure::from_1d(&[(1.0, 0.5), (-2.0, 1.5)]).unwrap();
        let text = discrete_to_json(&mu).to_string();
        assert_eq!(parse_measure(&text).unwrap(), MeasureInput::Discrete(mu));
    }

    #[test]
    fn density_round_trip() {
        let f = PiecewiseConstantDensity::new(vec![0.0, 1.0, 3.0], vec![2.0, 0.5]).unwrap();
        let text = density_to_json(&f).to_string();
        assert_eq!(parse_measure(&text).unwrap(), MeasureInput::Density(f));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(parse_measure("{"), Err(Error::Json(_))));
        assert!(parse_measure(r#"{"dim":1,"atoms":[{"x":[0],"w":-1}]}"#).is_err());
        assert!(parse_measure(r#"{"dim":1,"atoms":[{"x":[NaN],"w":1}]}"#).is_err());
        assert!(parse_measure(r#"{"dim":2,"atoms":[{"x":[0],"w":1}]}"#).is_err());
        assert!(parse_measure(r#"{"density1d":{"breaks":[0,1],"values":[-1]}}"#).is_err());
        assert!(parse_measure(r#"{"foo":1}"#).is_err());
    }

    #[test]
    fn density_input_is_discretized() {
        let text = r#"{"density1d":{"breaks":[0,1],"values":[1]}}"#;
        let mu = parse_measure(text).unwrap().into_discrete(4).unwrap();
        assert_eq!(mu.len(), 4);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    }
}

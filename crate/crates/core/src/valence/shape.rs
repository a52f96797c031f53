use serde::{Deserialize, Serialize};

use super::{Trajectory, ValenceError};
use crate::arc::{assign_phases, ArcTemplate};

/// Slopes below this fraction of the points' spread count as flat, which
/// keeps the verdict invariant under positive affine rescaling.
const FLAT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatch {
    pub per_segment_slopes: Vec<f64>,
    pub sign_match: Vec<bool>,
    pub matched: bool,
}

fn slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let spread = points
        .iter()
        .map(|(_, y)| (y - my).abs())
        .fold(0.0, f64::max);
    if sxx == 0.0 {
        return (0.0, spread);
    }
    (sxy / sxx, spread)
}

/// Least-squares slope per template segment, compared in sign with the
/// segment's direction.
///
/// Each run after the first also includes the last point of the previous
/// run, so a one-point run still has a direction. A one-point first run
/// borrows the next point instead.
pub fn shape_match(t: &Trajectory, template: &ArcTemplate) -> Result<ShapeMatch, ValenceError> {
    let n = t.len();
    let phases = assign_phases(template, n)?;
    let mut per_segment_slopes = Vec::with_capacity(template.len());
    let mut sign_match = Vec::with_capacity(template.len());
    for (k, dir) in template.segments.iter().enumerate() {
        let run = phases.run(k);
        let (lo, hi) = if k > 0 {
            (run.start - 1, run.end)
        } else if run.len() == 1 {
            (run.start, (run.end + 1).min(n))
        } else {
            (run.start, run.end)
        };
        let points: Vec<(f64, f64)> = (lo..hi).map(|i| (i as f64, t.values[i])).collect();
        let (s, spread) = slope(&points);
        per_segment_slopes.push(s);
        sign_match.push(s.abs() > FLAT * spread && s * dir.sign() > 0.0);
    }
    let matched = sign_match.iter().all(|&b| b);
    Ok(ShapeMatch {
        per_segment_slopes,
        sign_match,
        matched,
    })
}

/// Diagnostic: every consecutive step inside each run (including the step
/// into it) moves in the segment's direction.
pub fn stepwise_monotone(t: &Trajectory, template: &ArcTemplate) -> Result<bool, ValenceError> {
    let phases = assign_phases(template, t.len())?;
    Ok((1..t.len()).all(|i| {
        let step = t.values[i] - t.values[i - 1];
        step * phases.labels[i].sign() > 0.0
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arc::{target_valence_curve, ArcKind};
    use proptest::prelude::*;

    fn tpl(kind: ArcKind) -> ArcTemplate {
        kind.template().unwrap()
    }

    #[test]
    fn single_segment_examples() {
        let rise = tpl(ArcKind::RagsToRiches);
        let up = shape_match(&Trajectory::new(vec![0.1, 0.2, 0.3]), &rise).unwrap();
        assert!(up.matched);
        assert!((up.per_segment_slopes[0] - 0.1).abs() < 1e-12);
        let down = shape_match(&Trajectory::new(vec![0.3, 0.2, 0.1]), &rise).unwrap();
        assert!(!down.matched);
        let flat = shape_match(&Trajectory::new(vec![0.2, 0.2, 0.2]), &rise).unwrap();
        assert!(!flat.matched);
    }

    #[test]
    fn boundary_extension() {
        // Cinderella on 4 points: runs [0,1] [2] [3].
        let c = tpl(ArcKind::Cinderella);
        let m = shape_match(&Trajectory::new(vec![0.0, 1.0, 0.0, 0.5]), &c).unwrap();
        assert_eq!(m.per_segment_slopes, vec![1.0, -1.0, 0.5]);
        assert!(m.matched);

        // Icarus on 2 points: the first run borrows index 1.
        let i = tpl(ArcKind::Icarus);
        let m = shape_match(&Trajectory::new(vec![0.0, 1.0]), &i).unwrap();
        assert_eq!(m.per_segment_slopes, vec![1.0, 1.0]);
        assert_eq!(m.sign_match, vec![true, false]);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            shape_match(&Trajectory::new(vec![0.0, 1.0]), &tpl(ArcKind::Oedipus)),
            Err(ValenceError::Arc(_))
        ));
    }

    #[test]
    fn reference_curves_match_and_are_monotone() {
        for kind in ArcKind::ALL {
            // With one point per segment the first run has no slope of its own.
            for n in (kind.template().unwrap().len() + 1).max(2)..=12 {
                let t = Trajectory::new(target_valence_curve(&tpl(kind), n).unwrap());
                assert!(
                    shape_match(&t, &tpl(kind)).unwrap().matched,
                    "{kind:?} n={n}"
                );
                assert!(stepwise_monotone(&t, &tpl(kind)).unwrap(), "{kind:?} n={n}");
            }
        }
    }

    #[test]
    fn monotone_diagnostic_flags_wobble() {
        let t = Trajectory::new(vec![0.0, 0.5, 0.4, 0.9]);
        let rise = tpl(ArcKind::RagsToRiches);
        assert!(shape_match(&t, &rise).unwrap().matched);
        assert!(!stepwise_monotone(&t, &rise).unwrap());
    }

    proptest! {
        #[test]
        fn affine_invariance(
            values in prop::collection::vec(-1.0f64..1.0, 3..12),
            kind in prop::sample::select(ArcKind::ALL.to_vec()),
            a in 0.01f64..100.0,
            b in -10.0f64..10.0,
        ) {
            let template = tpl(kind);
            prop_assume!(values.len() >= template.len());
            let t = Trajectory::new(values.clone());
            let u = Trajectory::new(values.iter().map(|v| a * v + b).collect());
            let m = shape_match(&t, &template).unwrap();
            let mu = shape_match(&u, &template).unwrap();
            prop_assert_eq!(m.sign_match, mu.sign_match);
        }
    }
}

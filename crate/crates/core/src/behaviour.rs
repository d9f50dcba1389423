//! Behavioural decision layer.
//!
//! A land manager weighing a switch from intensity `I_A` to `I_B` combines
//! three drivers into an influence score `x`:
//!
//! * attitude: `-sign(I_B - I_A) * A`, so a positive (environmental) attitude
//!   supports extensification and opposes intensification;
//! * descriptive norm: the share of network neighbours already at or beyond
//!   the candidate intensity, minus a critical mass, doubled and clipped to
//!   `[-1, 1]`;
//! * inertia: `lambda * |I_B - I_A|`.
//!
//! `x = w * S + (1 - w) * A_eff - lambda * |dI|`, and the giving-in threshold
//! is the decreasing logistic `L / (1 + exp(k x))`. A competitor only takes
//! over a cell when its utility surplus exceeds that threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{AftKind, AftTable, Cell};
use crate::network::{Conformity, SocialNetwork};

/// Exponent guard for the logistic.
const EXP_LIMIT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviouralProfile {
    /// Environmental attitude in [-1, 1]; positive favours extensification.
    pub attitude: f64,
    pub inertia_coeff: f64,
    pub norm_weight: f64,
    pub cm_int: f64,
    pub cm_ext: f64,
    /// Upper limit `L` of the giving-in threshold.
    pub git_upper: f64,
}

impl Default for BehaviouralProfile {
    fn default() -> Self {
        BehaviouralProfile {
            attitude: 0.0,
            inertia_coeff: 0.0,
            norm_weight: 0.5,
            cm_int: 0.5,
            cm_ext: 0.5,
            git_upper: 1.0,
        }
    }
}

impl BehaviouralProfile {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("attitude_mean", self.attitude, -1.0, 1.0),
            ("inertia_lambda", self.inertia_coeff, 0.0, 1.0),
            ("norm_weight_w", self.norm_weight, 0.0, 1.0),
            ("cm_int", self.cm_int, 0.0, 1.0),
            ("cm_ext", self.cm_ext, 0.0, 1.0),
            ("git_upper_L", self.git_upper, 0.0, 1.0),
        ];
        for (key, v, lo, hi) in checks {
            if !(lo..=hi).contains(&v) {
                return Err(Error::config(key, format!("{v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Negated attitude and exchanged critical masses.
    pub fn mirrored(&self) -> Self {
        BehaviouralProfile {
            attitude: -self.attitude,
            cm_int: self.cm_ext,
            cm_ext: self.cm_int,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviourGlobals {
    pub logistic_steepness: f64,
}

impl BehaviourGlobals {
    pub fn new(logistic_steepness: f64) -> Result<Self> {
        if !(logistic_steepness > 0.0) || !logistic_steepness.is_finite() {
            return Err(Error::config(
                "logistic_k",
                format!("steepness must be positive, got {logistic_steepness}"),
            ));
        }
        Ok(BehaviourGlobals { logistic_steepness })
    }
}

impl Default for BehaviourGlobals {
    fn default() -> Self {
        BehaviourGlobals {
            logistic_steepness: 10.0,
        }
    }
}

/// Signed attitude support for moving from `i_current` to `i_candidate`.
pub fn attitude_effect(attitude: f64, i_current: f64, i_candidate: f64) -> Result<f64> {
    if i_current == i_candidate {
        return Err(Error::InvalidTransition(i_current));
    }
    Ok(if i_candidate < i_current {
        attitude
    } else {
        -attitude
    })
}

/// Net social pressure: conforming fraction minus critical mass.
pub fn social_influence(fraction_conforming: f64, critical_mass: f64) -> f64 {
    fraction_conforming - critical_mass
}

pub fn clip_social(s: f64) -> f64 {
    (2.0 * s).clamp(-1.0, 1.0)
}

/// Composite influence score `x`. Not clipped below: with inertia it can reach `-1 - lambda`.
pub fn influence_score(
    profile: &BehaviouralProfile,
    s_clipped: f64,
    attitude_eff: f64,
    i_current: f64,
    i_candidate: f64,
) -> f64 {
    profile.norm_weight * s_clipped + (1.0 - profile.norm_weight) * attitude_eff
        - profile.inertia_coeff * (i_candidate - i_current).abs()
}

pub fn giving_in_threshold(
    profile: &BehaviouralProfile,
    globals: &BehaviourGlobals,
    x: f64,
) -> f64 {
    let z = (globals.logistic_steepness * x).clamp(-EXP_LIMIT, EXP_LIMIT);
    profile.git_upper / (1.0 + z.exp())
}

/// Conformity predicate and critical mass for a transition direction.
pub fn conformity_for(
    profile: &BehaviouralProfile,
    i_current: f64,
    i_candidate: f64,
) -> (Conformity, f64) {
    if i_candidate > i_current {
        (Conformity::AtOrAbove(i_candidate), profile.cm_int)
    } else {
        (Conformity::AtOrBelow(i_candidate), profile.cm_ext)
    }
}

/// Giving-in threshold once the conforming neighbour fraction is known.
pub fn threshold_from_fraction(
    profile: &BehaviouralProfile,
    globals: &BehaviourGlobals,
    i_current: f64,
    i_candidate: f64,
    fraction_conforming: f64,
) -> Result<f64> {
    let attitude_eff = attitude_effect(profile.attitude, i_current, i_candidate)?;
    let (_, cm) = conformity_for(profile, i_current, i_candidate);
    let s = clip_social(social_influence(fraction_conforming, cm));
    let x = influence_score(profile, s, attitude_eff, i_current, i_candidate);
    Ok(giving_in_threshold(profile, globals, x))
}

/// Giving-in threshold for cell `i` switching to `candidate`, read from the
/// current land-use snapshot in `cells`.
pub fn evaluate_transition(
    i: usize,
    candidate: AftKind,
    network: &SocialNetwork,
    cells: &[Cell],
    afts: &AftTable,
    globals: &BehaviourGlobals,
) -> Result<f64> {
    let cell = &cells[i];
    let i_current = afts.intensity(cell.aft);
    let i_candidate = afts.intensity(candidate);
    if cell.aft == candidate {
        return Err(Error::InvalidTransition(i_current));
    }
    let (predicate, _) = conformity_for(&cell.profile, i_current, i_candidate);
    let conforming = network
        .neighbours(i)
        .iter()
        .filter(|&&j| predicate.matches(afts.intensity(cells[j as usize].aft)))
        .count();
    let degree = network.degree(i);
    if degree == 0 {
        return Err(Error::UndefinedFraction(i));
    }
    threshold_from_fraction(
        &cell.profile,
        globals,
        i_current,
        i_candidate,
        conforming as f64 / degree as f64,
    )
}

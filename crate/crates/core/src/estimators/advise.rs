use serde::Serialize;

/// Whether trial-specific intercurrent events are expected, and if so whether
/// the hypothetical effect that removes them can be identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialSpecificEvents {
    None,
    Identifiable,
    Unidentifiable,
}

impl TrialSpecificEvents {
    pub fn from_flags(occur: bool, identifiable: bool) -> Self {
        match (occur, identifiable) {
            (false, _) => TrialSpecificEvents::None,
            (true, true) => TrialSpecificEvents::Identifiable,
            (true, false) => TrialSpecificEvents::Unidentifiable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recommendation {
    pub situation: TrialSpecificEvents,
    pub estimands: u8,
    pub primary: &'static str,
    pub secondary: Option<&'static str>,
}

impl std::fmt::Display for Recommendation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Primary: {}", self.primary)?;
        if let Some(s) = self.secondary {
            writeln!(f, "Secondary: {s}")?;
        }
        Ok(())
    }
}

/// Estimand choice for a non-inferiority trial.
pub fn advise_estimand(occur: bool, identifiable: bool) -> Recommendation {
    match TrialSpecificEvents::from_flags(occur, identifiable) {
        TrialSpecificEvents::None => Recommendation {
            situation: TrialSpecificEvents::None,
            estimands: 1,
            primary: "Use a single primary estimand, with the handling of every intercurrent \
                      event chosen on clinical considerations.",
            secondary: None,
        },
        TrialSpecificEvents::Identifiable => Recommendation {
            situation: TrialSpecificEvents::Identifiable,
            estimands: 1,
            primary: "Use a single primary estimand that applies a hypothetical strategy to the \
                      trial-specific intercurrent events; other events are handled on clinical \
                      considerations.",
            secondary: None,
        },
        TrialSpecificEvents::Unidentifiable => Recommendation {
            situation: TrialSpecificEvents::Unidentifiable,
            estimands: 2,
            primary: "Define two estimands. The primary one handles intercurrent events on \
                      clinical considerations.",
            secondary: Some(
                "A secondary estimand applies a hypothetical strategy to the trial-specific \
                 intercurrent events, with results read in light of the untestable assumptions.",
            ),
        },
    }
}

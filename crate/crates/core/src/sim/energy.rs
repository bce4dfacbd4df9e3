use crate::model::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Charge {
    Tx,
    Rx,
    Overhear,
    Idle,
}

/// Per-node battery ledger. Charges are capped at the residual so that
/// `initial - residual` always equals the sum of the consumed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyState {
    pub initial: f64,
    pub residual: f64,
    pub consumed_tx: f64,
    pub consumed_rx: f64,
    pub consumed_overhear: f64,
    pub consumed_idle: f64,
    pub depleted_at: Option<SimTime>,
    idle_settled_to: SimTime,
}

impl EnergyState {
    pub fn new(initial: f64) -> Self {
        EnergyState {
            initial,
            residual: initial,
            consumed_tx: 0.0,
            consumed_rx: 0.0,
            consumed_overhear: 0.0,
            consumed_idle: 0.0,
            depleted_at: None,
            idle_settled_to: 0.0,
        }
    }

    pub fn alive(&self) -> bool {
        self.depleted_at.is_none()
    }

    pub fn consumed(&self) -> f64 {
        self.consumed_tx + self.consumed_rx + self.consumed_overhear + self.consumed_idle
    }

    /// Draws `power` watts over `[start, start + duration]`. Returns the
    /// depletion instant if this charge empties the battery.
    pub fn charge(&mut self, kind: Charge, power: f64, start: SimTime, duration: f64) -> Option<SimTime> {
        if !self.alive() || power <= 0.0 || duration <= 0.0 {
            return None;
        }
        let wanted = power * duration;
        let (amount, depleted) = if wanted >= self.residual {
            (self.residual, Some(start + self.residual / power))
        } else {
            (wanted, None)
        };
        match kind {
            Charge::Tx => self.consumed_tx += amount,
            Charge::Rx => self.consumed_rx += amount,
            Charge::Overhear => self.consumed_overhear += amount,
            Charge::Idle => self.consumed_idle += amount,
        }
        if depleted.is_some() {
            self.residual = 0.0;
            self.depleted_at = depleted;
        } else {
            self.residual -= amount;
        }
        depleted
    }

    /// Charges idle draw up to `now`.
    pub fn settle_idle(&mut self, idle_power: f64, now: SimTime) -> Option<SimTime> {
        let from = self.idle_settled_to;
        if now <= from {
            return None;
        }
        self.idle_settled_to = now;
        self.charge(Charge::Idle, idle_power, from, now - from)
    }

    /// Relative error of the ledger identity.
    pub fn ledger_error(&self) -> f64 {
        ((self.initial - self.residual) - self.consumed()).abs() / self.initial
    }
}

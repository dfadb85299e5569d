//! Driver input sources for the loop.

use std::path::Path;

use super::log::{read_csv, InputRow, RunLog};
use super::TelemetryError;
use crate::monitor::PhoneEventKind;
use crate::vehicle::DriverInput;

/// Interlock toggles carried alongside a driver input. `None` leaves the
/// current value alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SafetyPatch {
    pub gate_closed: Option<bool>,
    pub seatbelt_on: Option<bool>,
    pub estop_local: Option<bool>,
    pub estop_remote: Option<bool>,
}

impl SafetyPatch {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Later toggles win field by field.
    pub fn merge(&mut self, later: &SafetyPatch) {
        self.gate_closed = later.gate_closed.or(self.gate_closed);
        self.seatbelt_on = later.seatbelt_on.or(self.seatbelt_on);
        self.estop_local = later.estop_local.or(self.estop_local);
        self.estop_remote = later.estop_remote.or(self.estop_remote);
    }
}

/// Everything the loop consumes on one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickInput {
    pub driver: DriverInput,
    pub safety: SafetyPatch,
    /// Driver responses to the texting prompt, live mode only.
    pub phone: Vec<PhoneEventKind>,
}

impl From<DriverInput> for TickInput {
    fn from(driver: DriverInput) -> Self {
        Self {
            driver,
            ..Self::default()
        }
    }
}

pub trait InputSource {
    /// Input for tick `tick`, or `None` when the source is exhausted.
    fn next_input(&mut self, tick: u64) -> Option<TickInput>;
}

/// The same input on every tick, forever.
#[derive(Debug, Clone, Copy)]
pub struct ConstantInput(pub DriverInput);

impl InputSource for ConstantInput {
    fn next_input(&mut self, _tick: u64) -> Option<TickInput> {
        Some(self.0.into())
    }
}

/// Input computed from the tick index.
pub struct FnInput<F>(pub F);

impl<F: FnMut(u64) -> Option<DriverInput>> InputSource for FnInput<F> {
    fn next_input(&mut self, tick: u64) -> Option<TickInput> {
        (self.0)(tick).map(TickInput::from)
    }
}

/// One recorded input per tick, clamped on ingestion.
#[derive(Debug, Clone, Default)]
pub struct ScriptedInput {
    inputs: Vec<DriverInput>,
    pos: usize,
    clamped: usize,
}

impl ScriptedInput {
    pub fn new(raw: impl IntoIterator<Item = DriverInput>) -> Self {
        let mut clamped = 0;
        let inputs = raw
            .into_iter()
            .map(|i| {
                if !i.is_in_range() {
                    clamped += 1;
                }
                i.clamped()
            })
            .collect();
        Self {
            inputs,
            pos: 0,
            clamped,
        }
    }

    /// Reads a script laid out like `input.csv`.
    pub fn from_csv(path: &Path) -> Result<Self, TelemetryError> {
        let rows: Vec<InputRow> = read_csv(path, "input.csv")?;
        Ok(Self::from_rows(&rows))
    }

    pub fn from_rows(rows: &[InputRow]) -> Self {
        Self::new(
            rows.iter()
                .map(|r| DriverInput::new(r.steering, r.throttle, r.brake)),
        )
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Number of rows that were out of range and got clamped.
    pub fn clamped_rows(&self) -> usize {
        self.clamped
    }
}

impl InputSource for ScriptedInput {
    fn next_input(&mut self, _tick: u64) -> Option<TickInput> {
        let input = *self.inputs.get(self.pos)?;
        self.pos += 1;
        Some(input.into())
    }
}

/// Input source that reproduces a logged run tick for tick.
pub fn replay(log: &RunLog) -> ScriptedInput {
    ScriptedInput::from_rows(&log.input)
}

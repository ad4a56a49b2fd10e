//! CSV export of a simulation trace.
//!
//! Columns, in order: `cycle`; for every PE slot in level-major order
//! `pe<level>_<index>_fsm`, `_valid`, `_out`; then for every channel
//! (memory interface, intermediates, output interface) and every output
//! register `<channel>_out<o>_valid`, `_value`. Booleans are written 0/1.

use pixie_core::sim::TraceRow;
use pixie_core::{ChannelKind, GridSpec};

use crate::Error;

fn channel_name(kind: ChannelKind) -> String {
    match kind {
        ChannelKind::MemoryInterface => "vc_mem".into(),
        ChannelKind::Intermediate { above } => format!("vc_{above}"),
        ChannelKind::OutputInterface => "vc_out".into(),
    }
}

pub fn header(spec: &GridSpec) -> Result<Vec<String>, Error> {
    let mut cols = vec![String::from("cycle")];
    for (l, level) in spec.levels.iter().enumerate() {
        for i in 0..level.pe_count {
            for field in ["fsm", "valid", "out"] {
                cols.push(format!("pe{l}_{i}_{field}"));
            }
        }
    }
    for ch in spec.derive_channels()? {
        let name = channel_name(ch.kind);
        for o in 0..ch.output_count {
            cols.push(format!("{name}_out{o}_valid"));
            cols.push(format!("{name}_out{o}_value"));
        }
    }
    Ok(cols)
}

pub fn trace_to_csv(spec: &GridSpec, rows: &[TraceRow]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(format!("trace CSV: {e}"));
    w.write_record(header(spec)?).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![row.cycle.to_string()];
        for pe in &row.pes {
            rec.push(pe.fsm.name().to_owned());
            rec.push(u8::from(pe.valid).to_string());
            rec.push(pe.out.to_string());
        }
        for regs in &row.channels {
            for r in regs {
                rec.push(u8::from(r.valid).to_string());
                rec.push(r.value.to_string());
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(format!("trace CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

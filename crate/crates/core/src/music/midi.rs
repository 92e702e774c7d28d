//! Standard MIDI File subset: note-on and note-off only.
//!
//! Channels map to parts and timing is rescaled to 2400 ticks per quarter
//! note. Every other message is dropped on import and never written.

use std::collections::HashSet;

use midly::num::{u15, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

use super::{MusicEvent, TICKS_PER_QUARTER};
use crate::error::{Error, Result};

const EXPORT_VELOCITY: u8 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct RawNote {
    tick: u64,
    track: usize,
    order: usize,
    channel: u8,
    key: u8,
    on: bool,
}

fn rescale(tick: u64, ppq: u64) -> u64 {
    let num = u128::from(tick) * u128::from(TICKS_PER_QUARTER) * 2 + u128::from(ppq);
    (num / (2 * u128::from(ppq))) as u64
}

/// Parses note events from SMF bytes, sorted canonically.
///
/// Fails on SMPTE timing and on a note-on for a pitch already sounding on the
/// same channel.
pub fn import(bytes: &[u8]) -> Result<Vec<MusicEvent>> {
    let smf = Smf::parse(bytes).map_err(|e| Error::Midi(e.to_string()))?;
    let ppq = match smf.header.timing {
        Timing::Metrical(t) if t.as_int() > 0 => u64::from(t.as_int()),
        Timing::Metrical(_) => return Err(Error::Midi("zero ticks per quarter".into())),
        Timing::Timecode(..) => {
            return Err(Error::Midi(
                "SMPTE timecode division is not supported".into(),
            ))
        }
    };

    let mut notes = Vec::new();
    for (track, events) in smf.tracks.iter().enumerate() {
        let mut tick = 0u64;
        for (order, ev) in events.iter().enumerate() {
            tick += u64::from(ev.delta.as_int());
            if let TrackEventKind::Midi { channel, message } = ev.kind {
                let (key, on) = match message {
                    MidiMessage::NoteOn { key, vel } => (key, vel.as_int() > 0),
                    MidiMessage::NoteOff { key, .. } => (key, false),
                    _ => continue,
                };
                notes.push(RawNote {
                    tick,
                    track,
                    order,
                    channel: channel.as_int(),
                    key: key.as_int(),
                    on,
                });
            }
        }
    }
    notes.sort();

    let mut sounding = HashSet::new();
    let mut out = Vec::with_capacity(notes.len());
    for n in notes {
        if n.on {
            if !sounding.insert((n.channel, n.key)) {
                return Err(Error::Midi(format!(
                    "overlapping note: key {} on channel {} struck again at tick {} while sounding",
                    n.key, n.channel, n.tick
                )));
            }
        } else {
            sounding.remove(&(n.channel, n.key));
        }
        let pitch = u32::from(n.key) + 1;
        out.push(MusicEvent {
            t: rescale(n.tick, ppq),
            a: if n.on { pitch } else { pitch + 128 },
            part: u32::from(n.channel),
        });
    }
    out.sort_by_key(|e| (e.t, e.part, e.a));
    if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Midi(format!(
            "duplicate event after rescaling: {:?}",
            w[0]
        )));
    }
    Ok(out)
}

/// Writes a single-track SMF at 2400 ticks per quarter. Within a tick,
/// note-offs precede note-ons.
pub fn export(events: &[MusicEvent]) -> Result<Vec<u8>> {
    let mut sorted = events.to_vec();
    for ev in &sorted {
        if ev.a == 0 || ev.a > 256 || ev.part > 15 {
            return Err(Error::Midi(format!("event {ev:?} has no MIDI encoding")));
        }
    }
    sorted.sort_by_key(|e| (e.t, e.is_note_on(), e.part, e.pitch()));

    let mut track = Vec::with_capacity(sorted.len() + 1);
    let mut prev = 0u64;
    for ev in &sorted {
        let delta = u32::try_from(ev.t - prev)
            .ok()
            .and_then(u28::try_from)
            .ok_or_else(|| Error::Midi(format!("gap before tick {} too long", ev.t)))?;
        prev = ev.t;
        let key = u7::new((ev.pitch() - 1) as u8);
        let message = if ev.is_note_on() {
            MidiMessage::NoteOn {
                key,
                vel: u7::new(EXPORT_VELOCITY),
            }
        } else {
            MidiMessage::NoteOff {
                key,
                vel: u7::new(0),
            }
        };
        track.push(TrackEvent {
            delta,
            kind: TrackEventKind::Midi {
                channel: u4::new(ev.part as u8),
                message,
            },
        });
    }
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });

    let mut smf = Smf::new(Header::new(
        Format::SingleTrack,
        Timing::Metrical(u15::new(TICKS_PER_QUARTER as u16)),
    ));
    smf.tracks.push(track);
    let mut out = Vec::new();
    smf.write_std(&mut out)?;
    Ok(out)
}

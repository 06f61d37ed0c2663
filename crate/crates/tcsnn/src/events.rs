//! Line-oriented event files.
//!
//! ```text
//! # comment
//! channels=78 classes=5 steps=500
//! example label=2
//! 0 17
//! 4 3
//! ```
//!
//! The header comes first. Each `example` line opens a block of
//! `<channel> <timestep>` events; channels may interleave but timesteps
//! within one channel must strictly increase. Everything after `#` is
//! ignored. [`export_events`] writes events grouped by channel, so
//! `parse_events(&export_events(d)) == d`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tcsnn_core::spike::LabeledExample;
use tcsnn_core::{BinarySpikeTrain, SpikeDataset};

use crate::error::{Error, Result};

struct Header {
    channels: usize,
    classes: usize,
    steps: u32,
}

fn parse_header(line: usize, text: &str) -> Result<Header> {
    let (mut channels, mut classes, mut steps) = (None, None, None);
    for token in text.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, found `{token}`")))?;
        let bad = || {
            Error::parse(
                line,
                format!("`{key}` needs a non-negative integer, found `{value}`"),
            )
        };
        match key {
            "channels" => channels = Some(value.parse().map_err(|_| bad())?),
            "classes" => classes = Some(value.parse().map_err(|_| bad())?),
            "steps" => steps = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::parse(line, format!("unknown header key `{key}`"))),
        }
    }
    match (channels, classes, steps) {
        (Some(channels), Some(classes), Some(steps)) => Ok(Header {
            channels,
            classes,
            steps,
        }),
        _ => Err(Error::parse(line, "header needs channels=, classes= and steps=")),
    }
}

struct Block {
    label: usize,
    events: Vec<Vec<u32>>,
}

impl Block {
    fn finish(self, steps: u32) -> LabeledExample {
        let trains = self
            .events
            .into_iter()
            .enumerate()
            .map(|(ch, ev)| BinarySpikeTrain::new(ch as u32, ev, steps).expect("checked while parsing"))
            .collect();
        LabeledExample {
            trains,
            label: self.label,
        }
    }
}

pub fn parse_events(text: &str) -> Result<SpikeDataset> {
    let mut header: Option<Header> = None;
    let mut examples = Vec::new();
    let mut block: Option<Block> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some(h) = &header else {
            header = Some(parse_header(line, content)?);
            continue;
        };
        if let Some(rest) = content.strip_prefix("example") {
            let label = rest
                .trim()
                .strip_prefix("label=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| Error::parse(line, "expected `example label=<class>`"))?;
            if label >= h.classes {
                return Err(Error::parse(
                    line,
                    format!("label {label} out of range for {} classes", h.classes),
                ));
            }
            if let Some(b) = block.take() {
                examples.push(b.finish(h.steps));
            }
            block = Some(Block {
                label,
                events: vec![Vec::new(); h.channels],
            });
            continue;
        }
        let Some(b) = block.as_mut() else {
            return Err(Error::parse(line, "event before the first `example` line"));
        };
        let mut fields = content.split_whitespace();
        let (Some(ch), Some(t), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(
                line,
                format!("expected `<channel> <timestep>`, found `{content}`"),
            ));
        };
        let ch: usize = ch
            .parse()
            .map_err(|_| Error::parse(line, format!("bad channel `{ch}`")))?;
        let t: u32 = t
            .parse()
            .map_err(|_| Error::parse(line, format!("bad timestep `{t}`")))?;
        if ch >= h.channels {
            return Err(Error::parse(
                line,
                format!("channel {ch} out of range for {} channels", h.channels),
            ));
        }
        if t >= h.steps {
            return Err(Error::parse(
                line,
                format!("timestep {t} not below steps={}", h.steps),
            ));
        }
        let train = &mut b.events[ch];
        if train.last().is_some_and(|&last| last >= t) {
            return Err(Error::parse(
                line,
                format!(
                    "channel {ch}: timestep {t} does not follow {}",
                    train.last().unwrap()
                ),
            ));
        }
        train.push(t);
    }
    let h = header.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing header line"))?;
    if let Some(b) = block.take() {
        examples.push(b.finish(h.steps));
    }
    Ok(SpikeDataset::new(examples, h.channels, h.classes, h.steps)?)
}

pub fn export_events(dataset: &SpikeDataset) -> String {
    let mut out = format!(
        "channels={} classes={} steps={}\n",
        dataset.num_channels(),
        dataset.num_classes(),
        dataset.length_steps()
    );
    for ex in dataset.examples() {
        writeln!(out, "example label={}", ex.label).unwrap();
        for (ch, train) in ex.trains.iter().enumerate() {
            for t in train.events() {
                writeln!(out, "{ch} {t}").unwrap();
            }
        }
    }
    out
}

pub fn load_events(path: &Path) -> Result<SpikeDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_events(&text)
}

pub fn write_events(path: &Path, dataset: &SpikeDataset) -> Result<()> {
    fs::write(path, export_events(dataset)).map_err(|e| Error::io(path, e))
}

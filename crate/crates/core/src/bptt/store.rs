use std::collections::BTreeMap;

use rand::Rng;

use super::clip::{CropRect, VideoPair};
use crate::error::{Error, Result};
use crate::model::{init_state, InitKind, RecurrentState, RecurrentVsr};

#[derive(Clone, Debug)]
struct VideoStates {
    crop: CropRect,
    /// `states[i + 1]` is the state after frame `i`; `states[0]` is the initial state.
    states: Vec<RecurrentState>,
}

/// Per-epoch cache of recurrent states keyed by `(video, frame index)`, with index −1
/// holding the initial state each video's feed-forward pass started from.
///
/// Entries are plain values: nothing computed from them can backpropagate into the
/// pass that produced them.
#[derive(Clone, Debug, Default)]
pub struct HiddenStateStore {
    epoch: usize,
    videos: BTreeMap<usize, VideoStates>,
}

impl HiddenStateStore {
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.videos.values().map(|v| v.states.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn video_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.videos.keys().copied()
    }

    /// Frame indices stored for `video`, including −1.
    pub fn indices(&self, video: usize) -> Vec<i64> {
        self.videos
            .get(&video)
            .map(|v| (-1..v.states.len() as i64 - 1).collect())
            .unwrap_or_default()
    }

    pub fn crop(&self, video: usize) -> Option<CropRect> {
        self.videos.get(&video).map(|v| v.crop)
    }

    pub fn get(&self, video: usize, index: i64) -> Result<&RecurrentState> {
        self.videos
            .get(&video)
            .and_then(|v| usize::try_from(index + 1).ok().and_then(|i| v.states.get(i)))
            .ok_or(Error::MissingStoreEntry { video, index })
    }

    /// Overwrites one entry; used by experiments that perturb cached states.
    pub fn replace(&mut self, video: usize, index: i64, state: RecurrentState) -> Result<()> {
        let slot = self
            .videos
            .get_mut(&video)
            .and_then(|v| usize::try_from(index + 1).ok().and_then(|i| v.states.get_mut(i)))
            .ok_or(Error::MissingStoreEntry { video, index })?;
        *slot = state;
        Ok(())
    }
}

/// Gradient-free pass over every frame of every (cropped) video, starting from a fresh
/// `init_kind` state per video drawn from `rng` in video order.
pub fn build_store<R: Rng + ?Sized>(
    model: &RecurrentVsr,
    videos: &[VideoPair],
    crops: &[CropRect],
    init_kind: InitKind,
    rng: &mut R,
    epoch: usize,
) -> Result<HiddenStateStore> {
    if crops.len() != videos.len() {
        return Err(Error::invalid("one crop per video required"));
    }
    let mut store = HiddenStateStore {
        epoch,
        videos: BTreeMap::new(),
    };
    for (id, (pair, &crop)) in videos.iter().zip(crops).enumerate() {
        let mut state = init_state(init_kind, model.state_shape(crop.h, crop.w), rng);
        let mut states = Vec::with_capacity(pair.frame_count() + 1);
        states.push(state.clone());
        for frame in pair.lr.frames() {
            let lr = frame.crop(crop.x, crop.y, crop.w, crop.h)?;
            let (_, next) = model.advance(&lr, &state).map_err(|e| match e {
                Error::Divergence(m) => Error::Divergence(format!("store build, video {id}: {m}")),
                other => other,
            })?;
            states.push(next.clone());
            state = next;
        }
        store.videos.insert(id, VideoStates { crop, states });
    }
    Ok(store)
}

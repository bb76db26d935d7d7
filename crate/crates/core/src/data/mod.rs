//! Images, datasets and the transforms the measurement protocol needs.

mod augment;
mod cifar;
mod ppm;
mod rotate;
mod sampling;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub use augment::{augment_for_regression, hflip, plan_augmentation, AugmentPlan, EraseRect};
pub use cifar::{encode_cifar_record, load_cifar_binary, CIFAR10_CLASSES, CIFAR_RECORD_BYTES};
pub use ppm::{decode_ppm, encode_ppm, load_ppm_dir};
pub use rotate::{rotate, Rotation};
pub use sampling::{sample_episode_sets, EpisodeSampler, EpisodeSets};

use crate::error::{Error, Result};
use crate::tensor::{InputShape, Tensor};

/// Seen/unseen class of the discrimination task. `Seen` is class 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeenLabel {
    Seen,
    Unseen,
}

impl SeenLabel {
    pub fn index(self) -> usize {
        match self {
            SeenLabel::Seen => 0,
            SeenLabel::Unseen => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            SeenLabel::Seen
        } else {
            SeenLabel::Unseen
        }
    }
}

/// One decoded image, channel-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    id: String,
    channels: usize,
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(
        id: impl Into<String>,
        channels: usize,
        height: usize,
        width: usize,
        pixels: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!("image {id} has an empty dimension")));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "image {id}: {} pixels for {channels}×{height}×{width}",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Data(format!("image {id}: pixel {bad} outside [0,1]")));
        }
        Ok(Self {
            id,
            channels,
            height,
            width,
            pixels,
        })
    }

    pub(crate) fn from_parts_unchecked(
        id: String,
        channels: usize,
        height: usize,
        width: usize,
        pixels: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(pixels.len(), channels * height * width);
        Self {
            id,
            channels,
            height,
            width,
            pixels,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> InputShape {
        InputShape::new(self.channels, self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// One channel plane, row-major.
    pub fn plane(&self, channel: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.pixels[channel * hw..(channel + 1) * hw]
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// Stacks same-shaped images into a `[batch, C, H, W]` tensor.
pub fn stack_images<'a>(images: impl IntoIterator<Item = &'a ImageTensor>) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut shape: Option<InputShape> = None;
    let mut batch = 0;
    for img in images {
        match shape {
            None => shape = Some(img.shape()),
            Some(s) if s != img.shape() => {
                return Err(Error::Shape(format!(
                    "cannot batch {:?} with {s:?}",
                    img.shape()
                )))
            }
            _ => {}
        }
        data.extend_from_slice(img.pixels());
        batch += 1;
    }
    let s = shape.ok_or_else(|| Error::Usage("empty image batch".into()))?;
    Tensor::new(vec![batch, s.channels, s.height, s.width], data)
}

/// An immutable, non-empty collection of same-shaped images.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<ImageTensor>,
    labels: BTreeMap<String, String>,
    source: String,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(
        images: Vec<ImageTensor>,
        labels: BTreeMap<String, String>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let Some(first) = images.first() else {
            return Err(Error::Data("dataset is empty".into()));
        };
        let shape = first.shape();
        let mut index = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if img.shape() != shape {
                return Err(Error::Data(format!(
                    "image {} is {:?}, dataset is {shape:?}",
                    img.id(),
                    img.shape()
                )));
            }
            if index.insert(img.id().to_owned(), i).is_some() {
                return Err(Error::Data(format!("duplicate image id {}", img.id())));
            }
        }
        if let Some(id) = labels.keys().find(|id| !index.contains_key(*id)) {
            return Err(Error::Data(format!("label for unknown image {id}")));
        }
        Ok(Self {
            images,
            labels,
            source: source.into(),
            index,
        })
    }

    pub fn unlabeled(images: Vec<ImageTensor>, source: impl Into<String>) -> Result<Self> {
        Self::new(images, BTreeMap::new(), source)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[ImageTensor] {
        &self.images
    }

    pub fn get(&self, id: &str) -> Option<&ImageTensor> {
        self.index.get(id).map(|&i| &self.images[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.images.iter().map(ImageTensor::id)
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn shape(&self) -> InputShape {
        self.images[0].shape()
    }

    /// Looks up every id, failing on the first unknown one.
    pub fn resolve<'a, S: AsRef<str>>(&'a self, ids: &[S]) -> Result<Vec<&'a ImageTensor>> {
        ids.iter()
            .map(|id| {
                self.get(id.as_ref())
                    .ok_or_else(|| Error::Config(format!("unknown image id {}", id.as_ref())))
            })
            .collect()
    }
}

//! Stand-in prediction sources.
//!
//! None of these look at image content in a learned way. They exist so the
//! fuse / evaluate half of the pipeline can run without a network.

use crate::label::{ClassSet, ImageBuffer, LabelMap, DEFAULT_IGNORE_INDEX};
use crate::rng::RandomStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaselinePredictor {
    /// Every pixel gets the same class.
    Constant(u8),
    /// Each pixel gets the class whose palette color is nearest in RGB.
    NearestColor(ClassSet),
}

impl BaselinePredictor {
    pub fn constant(class: u8, classes: &ClassSet) -> Result<Self> {
        if class as usize >= classes.len() {
            return Err(Error::ClassOutOfRange {
                value: class,
                x: 0,
                y: 0,
                num_classes: classes.len(),
            });
        }
        Ok(BaselinePredictor::Constant(class))
    }

    pub fn nearest_color(classes: ClassSet) -> Self {
        BaselinePredictor::NearestColor(classes)
    }

    pub fn predict(&self, img: &ImageBuffer) -> Result<LabelMap> {
        let (w, h) = (img.width(), img.height());
        match self {
            BaselinePredictor::Constant(c) => Ok(LabelMap::filled(w, h, *c)),
            BaselinePredictor::NearestColor(classes) => {
                if img.channels() != 3 {
                    return Err(Error::ChannelMismatch {
                        expected: 3,
                        actual: img.channels(),
                    });
                }
                let palette: Vec<[i32; 3]> = classes
                    .classes()
                    .iter()
                    .map(|c| c.color.0.map(i32::from))
                    .collect();
                let data = img
                    .data()
                    .chunks_exact(3)
                    .map(|px| nearest(&palette, [px[0] as i32, px[1] as i32, px[2] as i32]))
                    .collect();
                LabelMap::new(w, h, data)
            }
        }
    }
}

/// First palette entry with the minimal squared distance.
fn nearest(palette: &[[i32; 3]], px: [i32; 3]) -> u8 {
    let mut best = (0u8, i32::MAX);
    for (i, c) in palette.iter().enumerate() {
        let d: i32 = (0..3).map(|k| (c[k] - px[k]).pow(2)).sum();
        if d < best.1 {
            best = (i as u8, d);
        }
    }
    best.0
}

/// Symmetric-uniform label noise.
///
/// Labelled pixels are visited in row-major order. Each draws `u`; if
/// `u < error_rate` it draws a second value selecting uniformly among the
/// other `num_classes - 1` classes. Ignored pixels draw nothing and are
/// copied through.
pub fn perturb_labels(
    gt: &LabelMap,
    error_rate: f64,
    num_classes: usize,
    stream: &mut RandomStream,
) -> Result<LabelMap> {
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(Error::InvalidArgument(format!(
            "error rate {error_rate} outside [0, 1]"
        )));
    }
    if !(2..=255).contains(&num_classes) {
        return Err(Error::InvalidArgument(format!(
            "label noise needs 2..=255 classes, got {num_classes}"
        )));
    }
    gt.validate(num_classes)?;
    let ignore = gt.ignore_index();
    let others = num_classes as u64 - 1;
    let data = gt
        .data()
        .iter()
        .map(|&v| {
            if v == ignore || stream.next_f64() >= error_rate {
                return v;
            }
            let r = stream.below(others) as u8;
            if r >= v {
                r + 1
            } else {
                r
            }
        })
        .collect();
    LabelMap::with_ignore(gt.width(), gt.height(), data, ignore)
}

/// Uniform random ground truth, used by synthetic experiments.
pub fn random_labels(width: u32, height: u32, num_classes: usize, stream: &mut RandomStream) -> LabelMap {
    let n = width as usize * height as usize;
    let data = (0..n).map(|_| stream.below(num_classes as u64) as u8).collect();
    LabelMap::with_ignore(width, height, data, DEFAULT_IGNORE_INDEX).expect("sized above")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{ClassInfo, Rgb};
    use crate::rng::derive_stream;

    fn palette() -> ClassSet {
        let colors = [[0, 0, 0], [200, 0, 0], [0, 200, 0], [100, 0, 0]];
        ClassSet::new(
            colors
                .iter()
                .enumerate()
                .map(|(i, c)| ClassInfo {
                    index: i as u8,
                    name: format!("c{i}"),
                    color: Rgb(*c),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_fills_map() {
        let img = ImageBuffer::filled(5, 3, 1, 77).unwrap();
        let p = BaselinePredictor::constant(2, &palette()).unwrap();
        assert_eq!(p.predict(&img).unwrap(), LabelMap::filled(5, 3, 2));
        assert!(BaselinePredictor::constant(4, &palette()).is_err());
    }

    #[test]
    fn nearest_color_recovers_painted_map() {
        let cs = palette();
        let truth = LabelMap::new(4, 2, vec![0, 1, 2, 3, 3, 2, 1, 0]).unwrap();
        let painted = crate::label::colorize(&truth, &cs).unwrap();
        let p = BaselinePredictor::nearest_color(cs);
        assert_eq!(p.predict(&painted).unwrap(), truth);
    }

    #[test]
    fn equidistant_goes_to_smaller_index() {
        // (50,0,0) is 2500 from both class 0 (black) and class 3 (100,0,0)
        let img = ImageBuffer::new(1, 1, 3, vec![50, 0, 0]).unwrap();
        let p = BaselinePredictor::nearest_color(palette());
        assert_eq!(p.predict(&img).unwrap().data(), &[0]);
        // (150,0,0) ties class 1 and class 3
        let img = ImageBuffer::new(1, 1, 3, vec![150, 0, 0]).unwrap();
        assert_eq!(p.predict(&img).unwrap().data(), &[1]);
    }

    #[test]
    fn nearest_color_needs_rgb() {
        let img = ImageBuffer::filled(2, 2, 1, 0).unwrap();
        let p = BaselinePredictor::nearest_color(palette());
        assert!(matches!(
            p.predict(&img),
            Err(Error::ChannelMismatch { expected: 3, actual: 1 })
        ));
    }

    #[test]
    fn zero_error_is_identity() {
        let gt = random_labels(32, 32, 5, &mut derive_stream(1, "gt"));
        let out = perturb_labels(&gt, 0.0, 5, &mut derive_stream(1, "noise")).unwrap();
        assert_eq!(out, gt);
    }

    #[test]
    fn full_error_changes_every_labelled_pixel() {
        let mut gt = random_labels(32, 32, 5, &mut derive_stream(2, "gt"));
        gt.data_mut()[..40].fill(255);
        let out = perturb_labels(&gt, 1.0, 5, &mut derive_stream(2, "noise")).unwrap();
        for (a, b) in gt.data().iter().zip(out.data()) {
            if *a == 255 {
                assert_eq!(*b, 255);
            } else {
                assert_ne!(a, b);
                assert!(*b < 5);
            }
        }
    }

    #[test]
    fn replacement_is_uniform_over_other_classes() {
        let gt = LabelMap::filled(200, 100, 2);
        let out = perturb_labels(&gt, 1.0, 5, &mut derive_stream(3, "noise")).unwrap();
        let mut hist = [0u32; 5];
        for &v in out.data() {
            hist[v as usize] += 1;
        }
        assert_eq!(hist[2], 0);
        for c in [0, 1, 3, 4] {
            // expected 5000 each, sd ~61
            assert!((4_750..5_250).contains(&hist[c]), "{hist:?}");
        }
    }

    #[test]
    fn empirical_accuracy_matches_rate() {
        let gt = random_labels(1000, 1000, 5, &mut derive_stream(4, "gt"));
        let out = perturb_labels(&gt, 0.2, 5, &mut derive_stream(4, "noise")).unwrap();
        let kept = gt.data().iter().zip(out.data()).filter(|(a, b)| a == b).count();
        let acc = kept as f64 / 1e6;
        assert!((acc - 0.8).abs() <= 0.005, "{acc}");
    }

    #[test]
    fn perturb_argument_checks() {
        let gt = LabelMap::filled(2, 2, 0);
        let mut s = derive_stream(0, "");
        assert!(perturb_labels(&gt, 1.5, 3, &mut s).is_err());
        assert!(perturb_labels(&gt, 0.5, 1, &mut s).is_err());
        assert!(perturb_labels(&LabelMap::filled(2, 2, 7), 0.5, 3, &mut s).is_err());
    }
}

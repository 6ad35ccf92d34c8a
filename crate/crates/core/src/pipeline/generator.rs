//! The generator contract: an image plus role-specific conditioning in, an
//! image plus a segmentation mask out.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::heatmaps::Heatmap;
use crate::image::{Image, SegMask};

/// Which network of the swap pipeline a generator plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Reenact,
    Segment,
    Inpaint,
    Blend,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Reenact, Role::Segment, Role::Inpaint, Role::Blend];

    pub fn byte(self) -> u8 {
        match self {
            Role::Reenact => b'r',
            Role::Segment => b's',
            Role::Inpaint => b'c',
            Role::Blend => b'b',
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Role::ALL.into_iter().find(|r| r.byte() == b)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Reenact => "reenactment",
            Role::Segment => "segmentation",
            Role::Inpaint => "inpainting",
            Role::Blend => "blending",
        })
    }
}

/// Role-specific inputs that accompany the request image.
#[derive(Clone, Debug, PartialEq)]
pub enum Conditioning {
    /// Segmentation takes the image alone.
    None,
    /// Reenactment target landmarks, rendered as a heatmap.
    Heatmap(Heatmap),
    /// Inpainting target shape: face-labelled pixels are to be completed.
    Mask(SegMask),
    /// Blending: the target frame and the mask of transferred pixels.
    Blend { target: Image, mask: SegMask },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenRequest {
    pub role: Role,
    pub image: Image,
    pub conditioning: Conditioning,
}

impl GenRequest {
    pub fn new(role: Role, image: Image, conditioning: Conditioning) -> Result<Self> {
        let req = Self {
            role,
            image: image.to_rgb(),
            conditioning,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = (self.height(), self.width());
        if self.image.channels() != 3 {
            return Err(Error::invalid("generator requests carry 3-channel images"));
        }
        let ok = match (&self.role, &self.conditioning) {
            (Role::Segment, Conditioning::None) => true,
            (Role::Reenact, Conditioning::Heatmap(hm)) => {
                hm.height() == h && hm.width() == w && hm.channels() > 0
            }
            (Role::Inpaint, Conditioning::Mask(m)) => m.height() == h && m.width() == w,
            (Role::Blend, Conditioning::Blend { target, mask }) => {
                target.height() == h
                    && target.width() == w
                    && target.channels() == 3
                    && mask.height() == h
                    && mask.width() == w
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "conditioning does not fit a {} request of {h}x{w}",
                self.role
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenResponse {
    pub image: Image,
    pub mask: SegMask,
}

pub trait Generator: Send {
    fn generate(&mut self, request: &GenRequest) -> Result<GenResponse>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HandleKind {
    BuiltinMock(String),
    ExternalProcess(String),
}

/// A generator plus the checks every call goes through. Requests on one
/// handle are serialized; distinct handles are independent.
pub struct GeneratorHandle {
    kind: HandleKind,
    dims: Option<(usize, usize)>,
    inner: Mutex<Box<dyn Generator>>,
    calls: AtomicUsize,
}

impl fmt::Debug for GeneratorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorHandle")
            .field("kind", &self.kind)
            .field("dims", &self.dims)
            .finish()
    }
}

impl GeneratorHandle {
    pub fn new(kind: HandleKind, generator: impl Generator + 'static) -> Self {
        Self {
            kind,
            dims: None,
            inner: Mutex::new(Box::new(generator)),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn mock(name: &str, generator: impl Generator + 'static) -> Self {
        Self::new(HandleKind::BuiltinMock(name.to_string()), generator)
    }

    /// Restricts the handle to rasters of exactly `height × width`.
    pub fn with_dims(mut self, height: usize, width: usize) -> Self {
        self.dims = Some((height, width));
        self
    }

    pub fn kind(&self) -> &HandleKind {
        &self.kind
    }

    /// Number of requests issued so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn call(&self, request: &GenRequest) -> Result<GenResponse> {
        request.validate()?;
        let (h, w) = (request.height(), request.width());
        if let Some(dims) = self.dims {
            if dims != (h, w) {
                return Err(Error::invalid(format!(
                    "generator expects {}x{} rasters, got {h}x{w}",
                    dims.0, dims.1
                )));
            }
        }
        let mut inner = self
            .inner
            .lock()
            .map_err(|_| Error::Peer("generator handle poisoned".into()))?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let resp = inner.generate(request)?;
        if resp.image.height() != h
            || resp.image.width() != w
            || resp.mask.height() != h
            || resp.mask.width() != w
        {
            return Err(Error::Peer(format!(
                "{} generator returned a raster of the wrong size",
                request.role
            )));
        }
        Ok(GenResponse {
            image: resp.image.to_rgb(),
            mask: resp.mask,
        })
    }
}

use crate::error::{Error, Result};

/// Dense height × width × channels tensor, channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    h: usize,
    w: usize,
    c: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self {
            h,
            w,
            c,
            data: vec![0.0; h * w * c],
        }
    }

    pub fn filled(h: usize, w: usize, c: usize, value: f64) -> Self {
        Self {
            h,
            w,
            c,
            data: vec![value; h * w * c],
        }
    }

    pub fn from_vec(h: usize, w: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w * c {
            return Err(Error::Shape {
                layer: "tensor".into(),
                expected: format!("{} entries for {h}x{w}x{c}", h * w * c),
                got: data.len().to_string(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite tensor entry at {i}")));
        }
        Ok(Self { h, w, c, data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn index(&self, y: usize, x: usize, ch: usize) -> usize {
        debug_assert!(y < self.h && x < self.w && ch < self.c);
        (y * self.w + x) * self.c + ch
    }

    pub fn get(&self, y: usize, x: usize, ch: usize) -> f64 {
        self.data[self.index(y, x, ch)]
    }

    pub fn set(&mut self, y: usize, x: usize, ch: usize, value: f64) {
        let i = self.index(y, x, ch);
        self.data[i] = value;
    }

    /// All channels at one spatial position.
    pub fn pixel(&self, y: usize, x: usize) -> &[f64] {
        let start = (y * self.w + x) * self.c;
        &self.data[start..start + self.c]
    }

    pub(crate) fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [f64] {
        let start = (y * self.w + x) * self.c;
        &mut self.data[start..start + self.c]
    }

    pub(crate) fn expect_dims(&self, layer: &str, dims: (usize, usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::Shape {
                layer: layer.into(),
                expected: format!("{}x{}x{}", dims.0, dims.1, dims.2),
                got: format!("{}x{}x{}", self.h, self.w, self.c),
            });
        }
        Ok(())
    }
}

"""Builders shared by the test modules."""

import math

import numpy as np

from fuseprint.model import (
    FeaturePoint,
    GrayImage,
    Modality,
    Template,
    TemplateKind,
)

_KIND_MODALITY = {
    TemplateKind.FACE: Modality.FACE,
    TemplateKind.FINGER: Modality.FINGER,
}


def make_point(x, y, theta=0.0, desc=None, modality=Modality.FACE):
    return FeaturePoint(x, y, theta, desc, modality)


def flat_desc(value=0.5, size=128):
    return np.full(size, float(value))


def random_template(rng, n, kind=TemplateKind.FACE, span=200.0,
                    with_desc=True, theta_span=360.0):
    """n points uniform in a span x span box, random thetas, uniform
    descriptors in [0, 1].  FUSED templates get a half/half modality mix."""
    pts = []
    for i in range(n):
        if kind is TemplateKind.FUSED:
            mod = Modality.FACE if i < n // 2 else Modality.FINGER
        else:
            mod = _KIND_MODALITY[kind]
        desc = rng.random(128) if with_desc else None
        pts.append(FeaturePoint(
            float(rng.random() * span),
            float(rng.random() * span),
            float(rng.random() * theta_span) % 360.0,
            desc,
            mod,
        ))
    return Template(tuple(pts), kind)


def shift_template(t, dx, dy):
    pts = [FeaturePoint(p.x + dx, p.y + dy, p.theta, p.descriptor, p.modality)
           for p in t.points]
    return t.with_points(pts)


def rect_image(angle_deg, size=300, half_w=95.0, half_h=60.0,
               fg=40, bg=255):
    """Dark rectangle rotated by angle_deg about the canvas center.

    Rasterized analytically: a pixel is foreground when its coordinates,
    rotated back by the angle, land inside the axis-aligned box.
    """
    c = (size - 1) / 2.0
    a = math.radians(angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    xs, ys = np.meshgrid(np.arange(size, dtype=np.float64),
                         np.arange(size, dtype=np.float64))
    dx = xs - c
    dy = ys - c
    ux = ca * dx + sa * dy
    uy = -sa * dx + ca * dy
    inside = (np.abs(ux) <= half_w) & (np.abs(uy) <= half_h)
    img = np.where(inside, float(fg), float(bg))
    return GrayImage(img.astype(np.uint8))


def grating_image(orientation_deg, wavelength, size=65):
    """Sinusoidal grating whose stripes run perpendicular to the given
    orientation, matching the filter bank's xr = x*cos + y*sin convention."""
    o = math.radians(orientation_deg)
    xs, ys = np.meshgrid(np.arange(size, dtype=np.float64),
                         np.arange(size, dtype=np.float64))
    xr = xs * math.cos(o) + ys * math.sin(o)
    img = 127.5 + 100.0 * np.cos(2.0 * math.pi * xr / wavelength)
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))

"""Ground-truth edge targets derived from bleed masks."""

import cv2
import numpy as np

_KERNEL = np.ones((3, 3), dtype=np.uint8)


def derive_edge_map(mask: np.ndarray) -> np.ndarray:
    """
    3x3 morphological gradient of a binary mask: dilate - erode.

    Borders are replicated, so a mask touching the image border gets no
    artificial edge along it.
    """
    binary = (np.asarray(mask) > 0).astype(np.uint8)
    dilated = cv2.dilate(binary, _KERNEL, borderType=cv2.BORDER_REPLICATE)
    eroded = cv2.erode(binary, _KERNEL, borderType=cv2.BORDER_REPLICATE)
    return (dilated - eroded).astype(bool)

# Hemotrack - Online Bleeding Region & Point Detector
__version__ = "1.0.0"

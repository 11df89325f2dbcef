"""SVG figures of planar configurations and projected spatial threads"""

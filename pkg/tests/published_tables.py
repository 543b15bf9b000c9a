"""(table, tracker, Pr, Re, F) rows as published, transcribed by hand."""

ROWS = [
    # backbone / training-data comparison on three datasets
    ("comparison RGBD1K", "STARK-S", 0.480, 0.510, 0.495),
    ("comparison RGBD1K", "STARK-S-FT", 0.509, 0.537, 0.522),
    ("comparison RGBD1K", "SPT", 0.545, 0.578, 0.561),
    ("comparison DepthTrack", "STARK-S", 0.490, 0.511, 0.500),
    ("comparison DepthTrack", "STARK-S-FT", 0.497, 0.517, 0.507),
    ("comparison DepthTrack", "SPT", 0.527, 0.549, 0.538),
    ("comparison CDTB", "STARK-S", 0.630, 0.701, 0.664),
    ("comparison CDTB", "STARK-S-FT", 0.638, 0.706, 0.670),
    ("comparison CDTB", "SPT", 0.654, 0.726, 0.688),
    # RGB-D trackers on RGBD1K
    ("RGBD1K", "DDiMP", 0.557, 0.534, 0.545),
    ("RGBD1K", "ATCAIS", 0.511, 0.451, 0.479),
    ("RGBD1K", "DRefine", 0.532, 0.462, 0.494),
    ("RGBD1K", "SLMD", 0.554, 0.526, 0.540),
    ("RGBD1K", "DAL", 0.562, 0.407, 0.472),
    ("RGBD1K", "DeT", 0.438, 0.419, 0.428),
    ("RGBD1K", "TSDM", 0.455, 0.361, 0.403),
    ("RGBD1K", "TALGD", 0.485, 0.415, 0.447),
    ("RGBD1K", "Siam_LTD", 0.543, 0.318, 0.398),
    ("RGBD1K", "SPT", 0.545, 0.578, 0.561),
    # DepthTrack
    ("DepthTrack", "DDiMP", 0.503, 0.469, 0.485),
    ("DepthTrack", "ATCAIS", 0.500, 0.455, 0.476),
    ("DepthTrack", "CLGS_D", 0.584, 0.369, 0.453),
    ("DepthTrack", "SiamDW_D", 0.429, 0.436, 0.432),
    ("DepthTrack", "LTDSEd", 0.430, 0.382, 0.405),
    ("DepthTrack", "Siam_LTD", 0.418, 0.342, 0.376),
    ("DepthTrack", "SiamM_Ds", 0.463, 0.264, 0.336),
    ("DepthTrack", "DAL", 0.512, 0.369, 0.429),
    ("DepthTrack", "DeT", 0.560, 0.506, 0.532),
    ("DepthTrack", "SPT", 0.527, 0.549, 0.538),
    # CDTB
    ("CDTB", "DDiMP", 0.703, 0.689, 0.696),
    ("CDTB", "ATCAIS", 0.709, 0.696, 0.702),
    ("CDTB", "CLGS_D", 0.725, 0.664, 0.693),
    ("CDTB", "SiamDW_D", 0.677, 0.685, 0.681),
    ("CDTB", "LTDSEd", 0.674, 0.643, 0.658),
    ("CDTB", "Siam_LTD", 0.626, 0.489, 0.549),
    ("CDTB", "SiamM_Ds", 0.685, 0.677, 0.681),
    ("CDTB", "OTR", 0.364, 0.312, 0.336),
    ("CDTB", "DeT", 0.674, 0.642, 0.657),
    ("CDTB", "SPT", 0.654, 0.726, 0.688),
    # fusion variants
    ("fusion RGBD1K", "Fusion A", 0.515, 0.545, 0.530),
    ("fusion RGBD1K", "Fusion B", 0.545, 0.578, 0.561),
    ("fusion RGBD1K", "Fusion C", 0.516, 0.546, 0.531),
    ("fusion RGBD1K", "Fusion D", 0.548, 0.580, 0.563),
    ("fusion CDTB", "Fusion A", 0.642, 0.711, 0.675),
    ("fusion CDTB", "Fusion B", 0.654, 0.726, 0.688),
    ("fusion CDTB", "Fusion C", 0.647, 0.716, 0.680),
    ("fusion CDTB", "Fusion D", 0.647, 0.717, 0.681),
    # RGB trackers on RGBD1K
    ("RGB trackers RGBD1K", "STARK", 0.481, 0.509, 0.495),
    ("RGB trackers RGBD1K", "PrDiMP", 0.393, 0.415, 0.404),
    ("RGB trackers RGBD1K", "DiMP", 0.408, 0.430, 0.419),
    ("RGB trackers RGBD1K", "SiamRPN++", 0.392, 0.411, 0.401),
    ("RGB trackers RGBD1K", "KeepTrack", 0.509, 0.541, 0.525),
    ("RGB trackers RGBD1K", "KYS", 0.375, 0.394, 0.384),
    ("RGB trackers RGBD1K", "TransT", 0.581, 0.443, 0.502),
    ("RGB trackers RGBD1K", "D3S", 0.355, 0.342, 0.348),
    ("RGB trackers RGBD1K", "SPT", 0.545, 0.578, 0.561),
]

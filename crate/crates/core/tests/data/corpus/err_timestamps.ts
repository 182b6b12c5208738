@problemName Bad
@timeStamps true
@univariate true
@seriesLength 3
@classLabel true a b
@data
(0,1),(1,2),(2,3):a

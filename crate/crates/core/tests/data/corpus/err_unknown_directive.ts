@problemName Bad
@univariate true
@seriesLength 3
@targetLabel true
@classLabel true a b
@data
1,2,3:a
